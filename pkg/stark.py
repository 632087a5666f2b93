"""
AC Stark Shift Calculator for ASGEM

Second-order light shifts of the ground hyperfine sublevels, the Raman/Rayleigh
scattering rate they come with, the memory bandwidth built from the shifts, and
the wavelength x intensity maps of both quantities.

Dipole matrix elements follow the hyperfine Wigner-Eckart reduction

    <F m|e r_q|F' m'> = <J||e r||J'> (-1)^(F'+J+1+I) sqrt((2F'+1)(2J+1)) {J J' 1; F' F I}
                        x (-1)^(F'-1+m) sqrt(2F+1) (F' 1 F; m' q -m)

so |<F m|e r|F' m'>|^2 reproduces the (2F+1)(2F'+1)(2J+1){6j}^2(3j)^2 weight of the
shift formula. A beam with spherical polarization q drives |F m> -> |F' m+q>.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.constants import c, epsilon_0, hbar

from angular_momentum import HalfInt, HalfIntLike, wigner_3j, wigner_6j
from atomic_data import (
    AtomicLine,
    HyperfineState,
    Manifold,
    enumerate_states,
    load_line,
    same_ground_manifold,
    transition_frequency,
)
from errors import ConfigError, DomainError, ResonanceError
from sweep_engine import DEFAULT_CHECKPOINT_EVERY, ParamGrid, run_sweep
from units import TWO_PI

logger = logging.getLogger(__name__)

# Refuse the perturbative formula this many linewidths from a transition
DEFAULT_RESONANCE_GUARD = 100.0

BANDWIDTH_LEVEL = TWO_PI * 1e9
SCATTERING_LEVEL = TWO_PI * 5e6

# Reference operating point: 1064 nm at 5e13 W/m^2
ANCHOR_WAVELENGTH = 1064e-9
ANCHOR_INTENSITY = 5e13


class StarkBeam(BaseModel):
    """Far-detuned dressing field"""

    model_config = ConfigDict(frozen=True)

    wavelength: float = Field(gt=0, description="m")
    intensity: float = Field(ge=0, description="W/m^2")
    polarization: Literal[-1, 0, 1] = 0

    @property
    def omega(self) -> float:
        """Laser angular frequency 2*pi*c/lambda"""
        return TWO_PI * c / self.wavelength


@dataclass(frozen=True)
class StarkShiftResult:
    states: Tuple[HyperfineState, ...]
    shifts: np.ndarray
    detuning: float

    def shift(self, F: HalfIntLike, m_F: HalfIntLike) -> float:
        F, m_F = HalfInt.of(F), HalfInt.of(m_F)
        for state, value in zip(self.states, self.shifts):
            if state.F == F and state.m_F == m_F:
                return float(value)
        raise DomainError(f"no ground state |F={F}, m={m_F}> in this result")

    @property
    def ground_F(self) -> Tuple[HalfInt, ...]:
        return tuple(sorted({state.F for state in self.states}))


@dataclass(frozen=True)
class BandwidthResult:
    bandwidth: float
    clock_shift: float
    lower_spread: float
    upper_spread: float
    lower_F: HalfInt
    upper_F: HalfInt


@dataclass(frozen=True)
class ScatteringResult:
    states: Tuple[HyperfineState, ...]
    rates: np.ndarray

    @property
    def max_rate(self) -> float:
        return float(np.max(self.rates)) if len(self.rates) else 0.0

    def rate(self, F: HalfIntLike, m_F: HalfIntLike) -> float:
        F, m_F = HalfInt.of(F), HalfInt.of(m_F)
        for state, value in zip(self.states, self.rates):
            if state.F == F and state.m_F == m_F:
                return float(value)
        raise DomainError(f"no ground state |F={F}, m={m_F}> in this result")


# ────────────────────────────── Matrix elements ────────────────────────── #
def _sign(twice_exponent: int) -> int:
    if twice_exponent % 2:
        raise DomainError("non-integral phase exponent in dipole element")
    return -1 if (twice_exponent // 2) % 2 else 1


def dipole_element(line: AtomicLine, ground: HyperfineState, excited: HyperfineState, q: int) -> float:
    """<F m| e r_q |F' m'> in C*m; zero unless m = m' + q"""
    tI = line.nuclear_spin.twice_value
    tJ = line.ground_J.twice_value
    tF, tm = ground.F.twice_value, ground.m_F.twice_value
    tFp, tmp = excited.F.twice_value, excited.m_F.twice_value

    three_j = wigner_3j(excited.F, 1, ground.F, excited.m_F, q, -ground.m_F)
    if three_j == 0.0:
        return 0.0
    six_j = wigner_6j(line.ground_J, line.excited_J, 1, excited.F, ground.F, line.nuclear_spin)
    phase = _sign(tFp + tJ + 2 + tI) * _sign(tFp - 2 + tm)
    return (
        line.reduced_dipole * phase
        * np.sqrt((tFp + 1) * (tJ + 1) * (tF + 1))
        * six_j * three_j
    )


@dataclass(frozen=True)
class CouplingTable:
    """
    Per-line couplings reused across a whole sweep

    absorption[g, i]   <i|d.e_q|g> up to a phase common to all i
    emission[s, f, i]  <f|d.e_s|i> for scattered polarizations s = -1, 0, +1
    frequency[g, i]    omega_{F_g F'_i}
    """

    ground: Tuple[HyperfineState, ...]
    excited: Tuple[HyperfineState, ...]
    absorption: np.ndarray
    emission: np.ndarray
    frequency: np.ndarray


@lru_cache(maxsize=64)
def coupling_table(line: AtomicLine, q: int) -> CouplingTable:
    ground = tuple(enumerate_states(line, Manifold.GROUND))
    excited = tuple(enumerate_states(line, Manifold.EXCITED))

    absorption = np.zeros((len(ground), len(excited)))
    frequency = np.zeros((len(ground), len(excited)))
    emission = np.zeros((3, len(ground), len(excited)))
    for g, gs in enumerate(ground):
        for i, es in enumerate(excited):
            frequency[g, i] = transition_frequency(line, gs.F, es.F)
            # absorption of q reaches m' = m + q; <g|d_{-q}|i> carries the same weight
            absorption[g, i] = dipole_element(line, gs, es, -q)
            for s, qs in enumerate((-1, 0, 1)):
                emission[s, g, i] = dipole_element(line, gs, es, qs)
    logger.debug(f"Built coupling table for {line.species.name}/{line.label}, q={q}")
    return CouplingTable(ground, excited, absorption, emission, frequency)


def spontaneous_decay_rate(line: AtomicLine, omega: Optional[float] = None) -> float:
    """omega^3 (2J+1)/(2J'+1) |<J||er||J'>|^2 / (3 pi eps0 hbar c^3), at omega (default line center)"""
    omega = line.line_center if omega is None else omega
    ratio = (line.ground_J.twice_value + 1) / (line.excited_J.twice_value + 1)
    return omega ** 3 * ratio * line.reduced_dipole ** 2 / (3 * np.pi * epsilon_0 * hbar * c ** 3)


# ────────────────────────────── Shift and scattering ───────────────────── #
def _check_resonance(beam: StarkBeam, line: AtomicLine, table: CouplingTable, guard: float) -> None:
    detunings = beam.omega - table.frequency
    margin = guard * line.linewidth
    inside_span = table.frequency.min() <= beam.omega <= table.frequency.max()
    if inside_span or np.min(np.abs(detunings)) <= margin:
        g, i = np.unravel_index(np.argmin(np.abs(detunings)), detunings.shape)
        raise ResonanceError(table.ground[g].F, table.excited[i].F, float(detunings[g, i]))


def _line_terms(
    beam: StarkBeam,
    line: AtomicLine,
    extra_lines: Sequence[AtomicLine],
    counter_rotating: bool,
    resonance_guard: float,
):
    """Stack absorption, emission and energy denominators of every summed line along the excited axis"""
    absorption, emission, denominators = [], [], []
    ground = None
    for member in (line, *extra_lines):
        if member is not line and not same_ground_manifold(line, member):
            raise DomainError(f"{member.label} does not share the ground manifold of {line.label}")
        table = coupling_table(member, beam.polarization)
        _check_resonance(beam, member, table, resonance_guard)
        inverse = 1.0 / (beam.omega - table.frequency)
        if counter_rotating:
            inverse = inverse - 1.0 / (beam.omega + table.frequency)
        absorption.append(table.absorption)
        emission.append(table.emission)
        denominators.append(inverse)
        ground = ground or table.ground
    return (
        ground,
        np.concatenate(absorption, axis=1),
        np.concatenate(emission, axis=2),
        np.concatenate(denominators, axis=1),
    )


def ground_state_shift(
    beam: StarkBeam,
    line: AtomicLine,
    extra_lines: Sequence[AtomicLine] = (),
    counter_rotating: bool = False,
    resonance_guard: float = DEFAULT_RESONANCE_GUARD,
) -> StarkShiftResult:
    """
    Light shift of every ground sublevel, in rad/s

        delta(F, m) = I / (2 hbar^2 eps0 c) * sum_i |<i|d.e_q|F m>|^2 / (omega_l - omega_FF')

    Args:
        beam: Stark beam
        line: line whose excited manifold is summed over
        extra_lines: further lines sharing the same ground manifold (e.g. D2)
        counter_rotating: add the -1/(omega_l + omega_FF') term
        resonance_guard: refusal distance from any transition, in linewidths

    Raises:
        ResonanceError: the beam lies within the hyperfine span or the guard band
    """
    ground, absorption, _, inverse = _line_terms(beam, line, extra_lines, counter_rotating, resonance_guard)
    shifts = beam.intensity * np.sum(absorption ** 2 * inverse, axis=1) / (2 * hbar ** 2 * epsilon_0 * c)
    return StarkShiftResult(ground, shifts, beam.omega - line.line_center)


def memory_bandwidth(shift: StarkShiftResult) -> BandwidthResult:
    """
    Delta_bw = |delta_20 - delta_10| + delta_1 + delta_2

    delta_F0 is the shift of |F, m=0>; delta_F is the largest departure of any
    |F, m> from delta_F0. Generalised to the two ground hyperfine levels of any line.
    """
    levels = shift.ground_F
    if len(levels) != 2:
        raise DomainError(f"memory bandwidth needs two ground hyperfine levels, got {[str(F) for F in levels]}")
    lower, upper = levels

    def clock_and_spread(F: HalfInt) -> Tuple[float, float]:
        members = [(state, value) for state, value in zip(shift.states, shift.shifts) if state.F == F]
        centre = [value for state, value in members if state.m_F.twice_value == 0]
        if not centre:
            raise DomainError(f"ground level F={F} has no m_F=0 state")
        spread = max(abs(value - centre[0]) for _, value in members)
        return float(centre[0]), float(spread)

    lower_clock, lower_spread = clock_and_spread(lower)
    upper_clock, upper_spread = clock_and_spread(upper)
    clock_shift = upper_clock - lower_clock
    return BandwidthResult(
        bandwidth=abs(clock_shift) + lower_spread + upper_spread,
        clock_shift=clock_shift,
        lower_spread=lower_spread,
        upper_spread=upper_spread,
        lower_F=lower,
        upper_F=upper,
    )


def scattering_rate(
    beam: StarkBeam,
    line: AtomicLine,
    extra_lines: Sequence[AtomicLine] = (),
    counter_rotating: bool = False,
    resonance_guard: float = DEFAULT_RESONANCE_GUARD,
) -> ScatteringResult:
    """
    Photon scattering rate out of each ground sublevel, in rad/s

        Gamma_sc = I omega_l^3 / (6 pi eps0^2 hbar^3 c^4)
                   * sum_{f, s} | sum_i <f|d.e_s|i><i|d.e_q|g> / (omega_l - omega_gi) |^2

    with f over the whole ground manifold and s over the three scattered polarizations.
    """
    ground, absorption, emission, inverse = _line_terms(beam, line, extra_lines, counter_rotating, resonance_guard)
    amplitudes = np.einsum("sfi,gi->gsf", emission, absorption * inverse)
    prefactor = beam.intensity * beam.omega ** 3 / (6 * np.pi * epsilon_0 ** 2 * hbar ** 3 * c ** 4)
    rates = prefactor * np.sum(amplitudes ** 2, axis=(1, 2))
    return ScatteringResult(ground, rates)


def scattering_estimate(shift: StarkShiftResult, line: AtomicLine) -> ScatteringResult:
    """Two-level shortcut hbar*Gamma_sc = (Gamma/Delta) * Delta_E per state"""
    if shift.detuning == 0:
        raise ResonanceError(None, None, 0.0, "beam sits on the line center")
    rates = line.linewidth / abs(shift.detuning) * np.abs(shift.shifts)
    return ScatteringResult(shift.states, rates)


# ────────────────────────────── Maps ───────────────────────────────────── #
def _stark_map(
    evaluator_name: str,
    wavelength_range: Tuple[float, float],
    intensity_range: Tuple[float, float],
    grid: Tuple[int, int],
    levels: Sequence[float],
    checkpoint_path,
    workers: int,
    checkpoint_every: int,
    restart: bool,
    progress,
    **evaluator_options,
):
    # imported here: evaluators depend on this module
    from evaluator_registry import get_evaluator_registry

    evaluator = get_evaluator_registry().create(evaluator_name, **evaluator_options)
    param_grid = ParamGrid.from_ranges(
        evaluator.x_name, wavelength_range, grid[0],
        evaluator.y_name, intensity_range, grid[1],
        x_spacing=evaluator.x_spacing, y_spacing=evaluator.y_spacing,
    )
    return run_sweep(
        param_grid,
        evaluator,
        checkpoint_path=checkpoint_path,
        value_name=evaluator.value_name,
        levels=levels,
        workers=workers,
        checkpoint_every=checkpoint_every,
        restart=restart,
        progress=progress,
    )


def bandwidth_map(
    wavelength_range: Tuple[float, float],
    intensity_range: Tuple[float, float],
    grid: Tuple[int, int],
    polarization: int = 0,
    line: Optional[AtomicLine] = None,
    extra_lines: Sequence[AtomicLine] = (),
    counter_rotating: bool = False,
    levels: Sequence[float] = (BANDWIDTH_LEVEL,),
    checkpoint_path=None,
    workers: int = 1,
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY,
    restart: bool = False,
    progress=None,
):
    """
    Delta_bw over a (wavelength, intensity) grid

    Wavelength is linearly spaced, intensity logarithmically. Cells on a resonance
    are masked. The default contour level is 2*pi x 1 GHz.
    """
    _check_map_ranges(wavelength_range, intensity_range)
    return _stark_map(
        "stark-bw", wavelength_range, intensity_range, grid, levels,
        checkpoint_path, workers, checkpoint_every, restart, progress,
        line=line or load_line(), polarization=polarization,
        extra_lines=tuple(extra_lines), counter_rotating=counter_rotating,
    )


def scattering_map(
    wavelength_range: Tuple[float, float],
    intensity_range: Tuple[float, float],
    grid: Tuple[int, int],
    polarization: int = 0,
    line: Optional[AtomicLine] = None,
    extra_lines: Sequence[AtomicLine] = (),
    counter_rotating: bool = False,
    levels: Sequence[float] = (SCATTERING_LEVEL,),
    checkpoint_path=None,
    workers: int = 1,
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY,
    restart: bool = False,
    progress=None,
):
    """Maximum Gamma_sc over a (wavelength, intensity) grid; default contour 2*pi x 5 MHz"""
    _check_map_ranges(wavelength_range, intensity_range)
    return _stark_map(
        "stark-scatter", wavelength_range, intensity_range, grid, levels,
        checkpoint_path, workers, checkpoint_every, restart, progress,
        line=line or load_line(), polarization=polarization,
        extra_lines=tuple(extra_lines), counter_rotating=counter_rotating,
    )


def _check_map_ranges(wavelength_range, intensity_range) -> None:
    if min(wavelength_range) <= 0:
        raise ConfigError("wavelengths must be positive")
    if min(intensity_range) <= 0:
        raise ConfigError("intensities of a log-spaced axis must be positive")


def anchor_in_window(result) -> bool:
    """Whether a Stark map's window contains the 1064 nm / 5e13 W/m^2 operating point"""
    xs, ys = result.grid.x_values, result.grid.y_values
    return bool(
        min(xs) <= ANCHOR_WAVELENGTH <= max(xs) and min(ys) <= ANCHOR_INTENSITY <= max(ys)
    )
