"""
Maxwell-Bloch Gradient Echo Solver for ASGEM

Weak-probe three-level Lambda system driven by a control field whose Rabi
frequency varies linearly along the medium, Omega_c(z) = zeta*Gamma*z/L, and flips
sign at t_rev to rephase the stored coherence into an echo.

Units inside the solver: time in tau = 1/Gamma, space in L, rates and fields in
Gamma. In the retarded frame the propagation equation reduces to
dOmega_p/dz = i (xi/2) rho31, integrated along z at every time; the two coherence
equations are stepped with classical RK4 on all z nodes at once.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid

from errors import ConfigError, DataFileError, EchoTruncatedError, IntegrationError, PassivityError
from sweep_engine import DEFAULT_CHECKPOINT_EVERY, ParamGrid, atomic_write_csv, run_sweep
from units import TWO_PI, parse_kv_file, parse_quantity

logger = logging.getLogger(__name__)

# Stability bound on dt * (fastest rate) for the RK4 step controller
STABILITY_BOUND = 0.5
PASSIVITY_SLACK = 1e-3
TRUNCATION_FRACTION = 1e-3
WEAK_PROBE_FRACTION = 0.1

GRID_MAGIC = b"ASGEMGRD"
GRID_HEADER = np.dtype([
    ("magic", "S8"),
    ("nt", "<u8"),
    ("nz", "<u8"),
    ("dt", "<f8"),
    ("dz", "<f8"),
    ("reserved", "S24"),
])

TRACE_COLUMNS = ["t_tau", "re_in", "im_in", "abs2_in", "re_out", "im_out", "abs2_out"]


class SimulationConfig(BaseModel):
    """Run parameters; rates in rad/s, times in units of tau = 1/Gamma"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    optical_depth: float = Field(2500.0, gt=0)
    gradient_strength: float = 1250.0
    linewidth: float = Field(TWO_PI * 5.75e6, gt=0)
    decoherence: float = Field(0.0, ge=0)
    probe_detuning: float = TWO_PI * 200e6
    control_detuning: float = TWO_PI * 50e6
    probe_amplitude: float = Field(TWO_PI * 5e3, ge=0)
    pulse_center: float = 0.048
    pulse_width: float = Field(0.005, gt=0)
    reversal_time: float = 0.16
    total_time: float = 0.5
    nz: int = Field(512, ge=2)
    nt: int = Field(2001, ge=2)
    control_mode: Literal["gradient", "uniform"] = "gradient"
    control_rabi: float = TWO_PI * 500e6
    reverse_gradient: bool = True
    max_halvings: int = Field(12, ge=0)
    store_full: bool = True

    @model_validator(mode="after")
    def _check_times(self) -> "SimulationConfig":
        if not 0 < self.pulse_center < self.reversal_time < self.total_time:
            raise ValueError("times must satisfy 0 < pulse_center < reversal_time < total_time")
        return self


def make_config(**values) -> SimulationConfig:
    """Build a SimulationConfig, reporting validation problems as ConfigError"""
    try:
        return SimulationConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid simulation config: {problems}")


# How each config-file key is read; frequencies need a Hz-family unit or rad/s
CONFIG_FILE_KINDS = {
    "optical_depth": "dimensionless",
    "gradient_strength": "dimensionless",
    "linewidth": "frequency",
    "decoherence": "frequency",
    "probe_detuning": "frequency",
    "control_detuning": "frequency",
    "probe_amplitude": "frequency",
    "pulse_center": "dimensionless",
    "pulse_width": "dimensionless",
    "reversal_time": "dimensionless",
    "total_time": "dimensionless",
    "nz": "int",
    "nt": "int",
    "control_mode": "text",
    "control_rabi": "frequency",
    "reverse_gradient": "bool",
    "max_halvings": "int",
    "store_full": "bool",
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a flat `key = value unit` simulation config

    Keys are SimulationConfig field names. Returns only the keys present, so the
    result can be layered over defaults and under command-line flags.

    Raises:
        DataFileError: unknown key or unparsable value, with its line number
    """
    values: Dict[str, Any] = {}
    for lineno, key, raw in parse_kv_file(path):
        kind = CONFIG_FILE_KINDS.get(key)
        if kind is None:
            raise DataFileError(f"unknown simulation key {key!r}", str(path), lineno)
        try:
            if kind == "int":
                values[key] = int(raw)
            elif kind == "bool":
                if raw.lower() not in _TRUE | _FALSE:
                    raise ValueError(f"expected true/false, got {raw!r}")
                values[key] = raw.lower() in _TRUE
            elif kind == "text":
                values[key] = raw
            else:
                values[key] = parse_quantity(raw, kind)
        except (ValueError, DataFileError) as e:
            raise DataFileError(f"{key}: {e}", str(path), lineno)
    return values


@dataclass
class FieldRecord:
    """
    Space-time history of one run

    Fields are in rad/s, coherences dimensionless. probe/rho31/rho21 have shape
    (nt, nz) and are None when the run was made with store_full=False.
    """

    t: np.ndarray
    z: np.ndarray
    input_trace: np.ndarray
    output_trace: np.ndarray
    probe: Optional[np.ndarray]
    rho31: Optional[np.ndarray]
    rho21: Optional[np.ndarray]
    config: SimulationConfig
    substeps: int = 1

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])


@dataclass(frozen=True)
class EchoMetrics:
    efficiency: float
    echo_center: Optional[float]
    echo_fwhm: Optional[float]
    input_fwhm: Optional[float]


# ────────────────────────────── Control field ──────────────────────────── #
def control_profile(
    zeta: float,
    t: float,
    z: Union[float, np.ndarray],
    t_rev: float,
    reverse: bool = True,
) -> Union[complex, np.ndarray]:
    """Omega_c in units of Gamma: zeta*z before t_rev, -zeta*z from t_rev on"""
    sign = -1.0 if (reverse and t >= t_rev) else 1.0
    value = sign * zeta * np.asarray(z, dtype=float)
    if value.ndim == 0:
        return complex(value)
    return value.astype(complex)


def gaussian_pulse(config: SimulationConfig, t: Union[float, np.ndarray]):
    """Omega_p0 exp(-((t - t0)/kappa)^2) in units of Gamma"""
    amplitude = config.probe_amplitude / config.linewidth
    return amplitude * np.exp(-(((np.asarray(t) - config.pulse_center) / config.pulse_width) ** 2))


def _control_base(config: SimulationConfig, z: np.ndarray) -> np.ndarray:
    if config.control_mode == "uniform":
        return np.full_like(z, config.control_rabi / config.linewidth)
    return config.gradient_strength * z


def substep_count(config: SimulationConfig) -> Tuple[int, int]:
    """Number of RK4 substeps per output step, and the halvings it took"""
    dt = config.total_time / (config.nt - 1)
    z = np.linspace(0.0, 1.0, config.nz)
    scale = config.linewidth
    rate = max(
        0.5,
        abs(config.probe_detuning) / scale,
        abs(config.control_detuning - config.probe_detuning) / scale + config.decoherence / scale,
        float(np.max(np.abs(_control_base(config, z)))),
        config.optical_depth / 4,
    )
    substeps, halvings = 1, 0
    while dt / substeps * rate > STABILITY_BOUND:
        if halvings >= config.max_halvings:
            z_fast = float(z[np.argmax(np.abs(_control_base(config, z)))])
            raise IntegrationError(
                f"step-size controller gave up after {halvings} halvings (rate {rate:.4g} Gamma)",
                t=0.0, z=z_fast,
            )
        substeps *= 2
        halvings += 1
    return substeps, halvings


# ────────────────────────────── Solver ─────────────────────────────────── #
def simulate(config: SimulationConfig) -> FieldRecord:
    """
    Integrate the Maxwell-Bloch system from zero coherences

        d rho31/dt = -(1/2 + i Dp) rho31 + (i/2) Oc rho21 + (i/2) Op
        d rho21/dt = (i (Dc - Dp) - g) rho21 + (i/2) Oc* rho31
        d Op/dz    = i (xi/2) rho31,        Op(t, 0) = Gaussian input

    Raises:
        IntegrationError: step control failed or the state went non-finite
        PassivityError: more energy left the medium than entered it
    """
    if config.probe_amplitude >= WEAK_PROBE_FRACTION * config.linewidth:
        logger.warning(
            f"Probe amplitude {config.probe_amplitude:.3g} rad/s is not << Gamma; "
            f"the linear Maxwell-Bloch model may not apply"
        )

    nz, nt = config.nz, config.nt
    z = np.linspace(0.0, 1.0, nz)
    t = np.linspace(0.0, config.total_time, nt)
    dz = z[1] - z[0]
    dt = t[1] - t[0]
    substeps, halvings = substep_count(config)
    if halvings:
        logger.info(f"Halved the time step {halvings} times ({substeps} RK4 substeps per output step)")

    scale = config.linewidth
    decay31 = 0.5 + 1j * config.probe_detuning / scale
    rate21 = 1j * (config.control_detuning - config.probe_detuning) / scale - config.decoherence / scale
    coupling = 0.5j * config.optical_depth
    base = _control_base(config, z)
    t_rev = config.reversal_time
    reverse = config.reverse_gradient

    def probe_field(rho31: np.ndarray, time: float) -> np.ndarray:
        return gaussian_pulse(config, time) + coupling * cumulative_trapezoid(rho31, dx=dz, initial=0)

    def rhs(state: np.ndarray, time: float, control: np.ndarray) -> np.ndarray:
        rho31, rho21 = state
        probe = probe_field(rho31, time)
        d31 = -decay31 * rho31 + 0.5j * control * rho21 + 0.5j * probe
        d21 = rate21 * rho21 + 0.5j * np.conj(control) * rho31
        return np.stack((d31, d21))

    def rk4(state: np.ndarray, start: float, stop: float) -> np.ndarray:
        h = stop - start
        midpoint = 0.5 * (start + stop)
        sign = -1.0 if (reverse and midpoint >= t_rev) else 1.0
        control = (sign * base).astype(complex)
        k1 = rhs(state, start, control)
        k2 = rhs(state + 0.5 * h * k1, start + 0.5 * h, control)
        k3 = rhs(state + 0.5 * h * k2, start + 0.5 * h, control)
        k4 = rhs(state + h * k3, stop, control)
        return state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    state = np.zeros((2, nz), dtype=complex)
    input_trace = np.empty(nt, dtype=complex)
    output_trace = np.empty(nt, dtype=complex)
    probe_full = np.empty((nt, nz), dtype=complex) if config.store_full else None
    rho31_full = np.empty((nt, nz), dtype=complex) if config.store_full else None
    rho21_full = np.empty((nt, nz), dtype=complex) if config.store_full else None

    def record(n: int) -> None:
        probe = probe_field(state[0], t[n])
        input_trace[n] = probe[0]
        output_trace[n] = probe[-1]
        if config.store_full:
            probe_full[n] = probe
            rho31_full[n] = state[0]
            rho21_full[n] = state[1]

    record(0)
    warned = False
    h = dt / substeps
    for n in range(nt - 1):
        for k in range(substeps):
            start = t[n] + k * h
            stop = t[n + 1] if k == substeps - 1 else t[n] + (k + 1) * h
            # the control sign must be constant inside every RK4 step
            if reverse and start < t_rev < stop:
                state = rk4(state, start, t_rev)
                state = rk4(state, t_rev, stop)
            else:
                state = rk4(state, start, stop)

        if not np.all(np.isfinite(state)):
            bad = int(np.argmax(~np.all(np.isfinite(state), axis=0)))
            raise IntegrationError("coherences became non-finite", t=float(t[n + 1]), z=float(z[bad]))
        if not warned and np.max(np.abs(state)) > 1.0:
            logger.warning(f"|rho| exceeds 1 at t={t[n + 1]:.4g} tau; the weak-probe assumption is broken")
            warned = True
        record(n + 1)

    record_ = FieldRecord(
        t=t,
        z=z,
        input_trace=input_trace * scale,
        output_trace=output_trace * scale,
        probe=probe_full * scale if config.store_full else None,
        rho31=rho31_full,
        rho21=rho21_full,
        config=config,
        substeps=substeps,
    )
    _check_passivity(record_)
    return record_


def _check_passivity(record: FieldRecord) -> None:
    energy_in = trapezoid(np.abs(record.input_trace) ** 2, record.t)
    energy_out = trapezoid(np.abs(record.output_trace) ** 2, record.t)
    if energy_in > 0 and energy_out > energy_in * (1 + PASSIVITY_SLACK):
        raise PassivityError(
            f"output energy exceeds input energy by {energy_out / energy_in - 1:.3g}",
            t=float(record.t[-1]), z=1.0,
        )


# ────────────────────────────── Echo metrics ───────────────────────────── #
def _fwhm(t: np.ndarray, intensity: np.ndarray) -> Optional[float]:
    if intensity.size < 3 or np.max(intensity) <= 0:
        return None
    peak = int(np.argmax(intensity))
    half = intensity[peak] / 2

    left = peak
    while left > 0 and intensity[left] >= half:
        left -= 1
    right = peak
    while right < intensity.size - 1 and intensity[right] >= half:
        right += 1
    if intensity[left] >= half or intensity[right] >= half:
        return None

    t_left = np.interp(half, [intensity[left], intensity[left + 1]], [t[left], t[left + 1]])
    t_right = np.interp(half, [intensity[right], intensity[right - 1]], [t[right], t[right - 1]])
    return float(t_right - t_left)


def echo_metrics(record: FieldRecord, t_rev: Optional[float] = None, check_truncation: bool = True) -> EchoMetrics:
    """
    Efficiency and shape of the retrieved echo

    R = int_{t >= t_rev} |Op(t, L)|^2 dt / int |Op(t, 0)|^2 dt. The echo center is the
    intensity-weighted centroid of the output after t_rev.

    Raises:
        EchoTruncatedError: output at the window end is above 1e-3 of the echo peak
    """
    t_rev = record.config.reversal_time if t_rev is None else t_rev
    t = record.t
    intensity_in = np.abs(record.input_trace) ** 2
    intensity_out = np.abs(record.output_trace) ** 2

    energy_in = trapezoid(intensity_in, t)
    after = t >= t_rev
    if energy_in <= 0 or np.count_nonzero(after) < 2:
        return EchoMetrics(0.0, None, None, _fwhm(t, intensity_in))

    t_echo, echo = t[after], intensity_out[after]
    peak = float(np.max(echo))
    if peak <= 0:
        return EchoMetrics(0.0, None, None, _fwhm(t, intensity_in))
    if check_truncation and echo[-1] > TRUNCATION_FRACTION * peak:
        raise EchoTruncatedError(
            f"echo not contained in the window: |Op(T, L)|^2 is {echo[-1] / peak:.3g} of the echo peak "
            f"at T={t[-1]:.4g} tau; increase the total time"
        )

    retrieved = trapezoid(echo, t_echo)
    return EchoMetrics(
        efficiency=float(retrieved / energy_in),
        echo_center=float(trapezoid(t_echo * echo, t_echo) / retrieved),
        echo_fwhm=_fwhm(t_echo, echo),
        input_fwhm=_fwhm(t, intensity_in),
    )


def retrieved_fraction(record: FieldRecord, t_rev: Optional[float] = None) -> float:
    """Energy leaving after t_rev over input energy, without any echo-shape checks"""
    return echo_metrics(record, t_rev, check_truncation=False).efficiency


# ────────────────────────────── Efficiency map ─────────────────────────── #
def efficiency_map(
    xi_range: Tuple[float, float],
    zeta_range: Tuple[float, float],
    grid: Tuple[int, int],
    base_config: Optional[SimulationConfig] = None,
    levels: Sequence[float] = (0.9,),
    checkpoint_path=None,
    workers: int = 1,
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY,
    restart: bool = False,
    progress=None,
):
    """
    R(xi, zeta) on a linear grid

    Every cell is an independent simulate() run on base_config with xi and zeta
    replaced; runs that fail are marked failed and the sweep carries on.
    """
    from evaluator_registry import get_evaluator_registry

    if min(xi_range) <= 0:
        raise ConfigError("optical depths must be positive")
    if min(zeta_range) <= 0:
        raise ConfigError("gradient strengths must be positive")

    evaluator = get_evaluator_registry().create("efficiency", base_config=base_config or SimulationConfig())
    param_grid = ParamGrid.from_ranges(
        evaluator.x_name, xi_range, grid[0], evaluator.y_name, zeta_range, grid[1],
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


# ────────────────────────────── Export ─────────────────────────────────── #
def write_traces_csv(record: FieldRecord, path: Union[str, Path]) -> Path:
    """Input and output traces as t_tau,re_in,im_in,abs2_in,re_out,im_out,abs2_out"""
    frame = pd.DataFrame({
        "t_tau": record.t,
        "re_in": record.input_trace.real,
        "im_in": record.input_trace.imag,
        "abs2_in": np.abs(record.input_trace) ** 2,
        "re_out": record.output_trace.real,
        "im_out": record.output_trace.imag,
        "abs2_out": np.abs(record.output_trace) ** 2,
    }, columns=TRACE_COLUMNS)
    atomic_write_csv(frame, path)
    return Path(path)


def write_grid_dump(record: FieldRecord, path: Union[str, Path]) -> Path:
    """
    Full probe field as a binary dump

    64-byte little-endian header (magic ASGEMGRD, nt, nz, dt, dz, padding)
    followed by nt*nz complex64 values, t index outer.
    """
    if record.probe is None:
        raise ConfigError("grid dump needs a run made with store_full=True")
    header = np.zeros(1, dtype=GRID_HEADER)
    header["magic"] = GRID_MAGIC
    header["nt"] = record.probe.shape[0]
    header["nz"] = record.probe.shape[1]
    header["dt"] = record.dt
    header["dz"] = record.dz
    path = Path(path)
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(record.probe, dtype="<c8").tobytes())
    return path


def read_grid_dump(path: Union[str, Path]) -> Tuple[dict, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < GRID_HEADER.itemsize:
        raise ConfigError(f"{path} is too short for a grid dump")
    header = np.frombuffer(raw[:GRID_HEADER.itemsize], dtype=GRID_HEADER)[0]
    if bytes(header["magic"]) != GRID_MAGIC:
        raise ConfigError(f"{path} is not a grid dump (bad magic)")
    nt, nz = int(header["nt"]), int(header["nz"])
    data = np.frombuffer(raw[GRID_HEADER.itemsize:], dtype="<c8")
    if data.size != nt * nz:
        raise ConfigError(f"{path} holds {data.size} values, header says {nt}x{nz}")
    info = {"nt": nt, "nz": nz, "dt": float(header["dt"]), "dz": float(header["dz"])}
    return info, data.reshape(nt, nz)
