"""
Atomic Data Registry for ASGEM

Holds hyperfine level structure, reduced dipole elements and linewidths of the
transition lines the Stark calculator sums over. The 87Rb D1 line is built in;
further lines (D2, other alkalis) are read from `key = value unit` data files
found on the search path given by ASGEM_DATA_DIR.

All frequencies are angular (rad/s). Hyperfine offsets are measured from the
(2F+1)-weighted centroid of their manifold, as produced by the usual magnetic
dipole / electric quadrupole A, B coefficients.
"""

import logging
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from angular_momentum import HalfInt, HalfIntLike, projections
from errors import AngularMomentumError, DataFileError, DomainError, UnknownLineError
from units import TWO_PI, parse_quantity, parse_kv_file

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "ASGEM_DATA_DIR"
PACKAGE_DATA_DIR = Path(__file__).resolve().parent / "data"


class Manifold(str, Enum):
    GROUND = "ground"
    EXCITED = "excited"


@dataclass(frozen=True)
class AtomicSpecies:
    name: str
    nuclear_spin: HalfInt
    ground_J: HalfInt

    def __post_init__(self):
        for label, value in (("nuclear_spin", self.nuclear_spin), ("ground_J", self.ground_J)):
            if not isinstance(value, HalfInt) or value.twice_value < 0:
                raise DomainError(f"{label} must be a non-negative half-integer, got {value!r}")


@dataclass(frozen=True, order=True)
class HyperfineState:
    """A |J, F, m_F> sublevel; ordering is (manifold, F, m_F)"""

    manifold: Manifold
    F: HalfInt
    m_F: HalfInt

    def __post_init__(self):
        if abs(self.m_F.twice_value) > self.F.twice_value:
            raise DomainError(f"|m_F| exceeds F in {self}")

    def __str__(self) -> str:
        prime = "'" if self.manifold is Manifold.EXCITED else ""
        return f"|F{prime}={self.F}, m={self.m_F}>"


HyperfineLevels = Tuple[Tuple[HalfInt, float], ...]


@dataclass(frozen=True)
class AtomicLine:
    """A J -> J' transition manifold with its hyperfine structure"""

    species: AtomicSpecies
    label: str
    excited_J: HalfInt
    reduced_dipole: float
    linewidth: float
    line_center: float
    ground_hyperfine: HyperfineLevels
    excited_hyperfine: HyperfineLevels
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.reduced_dipole > 0:
            raise DomainError(f"{self.label}: reduced_dipole must be > 0")
        if not self.linewidth > 0:
            raise DomainError(f"{self.label}: linewidth must be > 0")
        if not self.line_center > 0:
            raise DomainError(f"{self.label}: line_center must be > 0")
        _check_manifold(self.label, "ground", self.species.ground_J, self.species.nuclear_spin, self.ground_hyperfine)
        _check_manifold(self.label, "excited", self.excited_J, self.species.nuclear_spin, self.excited_hyperfine)

    @property
    def ground_J(self) -> HalfInt:
        return self.species.ground_J

    @property
    def nuclear_spin(self) -> HalfInt:
        return self.species.nuclear_spin

    @property
    def ground_F(self) -> Tuple[HalfInt, ...]:
        return tuple(F for F, _ in self.ground_hyperfine)

    @property
    def excited_F(self) -> Tuple[HalfInt, ...]:
        return tuple(F for F, _ in self.excited_hyperfine)

    def offset(self, manifold: Manifold, F: HalfIntLike) -> float:
        F = HalfInt.of(F)
        levels = self.ground_hyperfine if Manifold(manifold) is Manifold.GROUND else self.excited_hyperfine
        for level, offset in levels:
            if level == F:
                return offset
        raise DomainError(f"F={F} is not in the {Manifold(manifold).value} manifold of {self.label}")

    @property
    def ground_splitting(self) -> float:
        offsets = [offset for _, offset in self.ground_hyperfine]
        return max(offsets) - min(offsets)

    @property
    def excited_splitting(self) -> float:
        offsets = [offset for _, offset in self.excited_hyperfine]
        return max(offsets) - min(offsets)


def _check_manifold(label: str, name: str, J: HalfInt, I: HalfInt, levels: HyperfineLevels) -> None:
    allowed = list(range(abs(J.twice_value - I.twice_value), J.twice_value + I.twice_value + 1, 2))
    present = [F.twice_value for F, _ in levels]
    if sorted(present) != allowed or present != sorted(present):
        raise DomainError(
            f"{label}: {name} manifold must list every F from |J-I| to J+I once in ascending order, "
            f"got {[str(F) for F, _ in levels]}"
        )
    offsets = [offset for _, offset in levels]
    weights = [F.twice_value + 1 for F, _ in levels]
    centroid = sum(w * o for w, o in zip(weights, offsets)) / sum(weights)
    span = max(offsets) - min(offsets)
    if abs(centroid) > 1e-6 * max(span, 1.0):
        raise DomainError(f"{label}: {name} hyperfine offsets are not referenced to their centroid")


# ────────────────────────────── Operations ─────────────────────────────── #
def transition_frequency(line: AtomicLine, F: HalfIntLike, F_prime: HalfIntLike) -> float:
    """omega_FF' = line_center + excited_offset(F') - ground_offset(F)"""
    return line.line_center + line.offset(Manifold.EXCITED, F_prime) - line.offset(Manifold.GROUND, F)


def enumerate_states(line: AtomicLine, manifold: Union[Manifold, str]) -> List[HyperfineState]:
    """All sublevels of a manifold, ordered by F then m_F"""
    manifold = Manifold(manifold)
    levels = line.ground_hyperfine if manifold is Manifold.GROUND else line.excited_hyperfine
    return [HyperfineState(manifold, F, m) for F, _ in levels for m in projections(F)]


# ────────────────────────────── Built-in data ──────────────────────────── #
# 87Rb D1 (5S1/2 -> 5P1/2), from the standard alkali D-line tables
RB87 = AtomicSpecies(name="rb87", nuclear_spin=HalfInt.of("3/2"), ground_J=HalfInt.of("1/2"))

RB87_D1 = AtomicLine(
    species=RB87,
    label="D1",
    excited_J=HalfInt.of("1/2"),
    reduced_dipole=2.5377e-29,
    linewidth=TWO_PI * 5.7500e6,
    line_center=TWO_PI * 377.107463380e12,
    ground_hyperfine=(
        (HalfInt.of(1), TWO_PI * -4.271676631815181e9),
        (HalfInt.of(2), TWO_PI * 2.563005979089109e9),
    ),
    excited_hyperfine=(
        (HalfInt.of(1), TWO_PI * -509.05e6),
        (HalfInt.of(2), TWO_PI * 305.43e6),
    ),
    source="built-in",
)

_REGISTRY: Dict[Tuple[str, str], AtomicLine] = {}


def _key(species: str, line: str) -> Tuple[str, str]:
    return species.strip().lower(), line.strip().lower()


def register_line(line: AtomicLine) -> AtomicLine:
    """Add a line to the registry; re-registering identical data is a no-op"""
    key = _key(line.species.name, line.label)
    existing = _REGISTRY.get(key)
    if existing is not None:
        if existing == line:
            return existing
        logger.warning(f"Replacing registered line {line.species.name}/{line.label} with {line.source}")
    _REGISTRY[key] = line
    logger.info(f"Registered line {line.species.name}/{line.label} ({line.source})")
    return line


def registered_lines() -> List[Tuple[str, str]]:
    return sorted(_REGISTRY)


register_line(RB87_D1)


# ────────────────────────────── Data files ─────────────────────────────── #
_OFFSET_KEY = re.compile(r"^(ground|excited)_F(\d+(?:/2)?)_offset$")
_REQUIRED_KEYS = ("reduced_dipole", "linewidth", "line_center", "nuclear_spin", "ground_J", "excited_J")
_QUANTITY_KINDS = {"reduced_dipole": "dipole", "linewidth": "frequency", "line_center": "frequency"}


def parse_line_file(path: Union[str, Path]) -> AtomicLine:
    """
    Parse an atomic data file into an AtomicLine without registering it

    Recognised keys: species, line, reduced_dipole, linewidth, line_center,
    nuclear_spin, ground_J, excited_J, ground_F<k>_offset, excited_F<k>_offset.
    Species and line default to the `<species>_<line>` file stem.
    """
    path = Path(path)
    values: Dict[str, Tuple[int, object]] = {}
    offsets: Dict[str, List[Tuple[HalfInt, float, int]]] = {"ground": [], "excited": []}

    for lineno, key, raw in parse_kv_file(path):
        try:
            match = _OFFSET_KEY.match(key)
            if match:
                manifold, F = match.groups()
                offsets[manifold].append((HalfInt.of(F), parse_quantity(raw, "frequency"), lineno))
            elif key in _QUANTITY_KINDS:
                values[key] = (lineno, parse_quantity(raw, _QUANTITY_KINDS[key]))
            elif key in ("nuclear_spin", "ground_J", "excited_J"):
                values[key] = (lineno, HalfInt.of(raw))
            elif key in ("species", "line"):
                values[key] = (lineno, raw)
            else:
                raise DataFileError(f"unknown key {key!r}", str(path), lineno)
        except DataFileError as e:
            if e.lineno is None:
                raise DataFileError(str(e), str(path), lineno)
            raise
        except AngularMomentumError as e:
            raise DataFileError(str(e), str(path), lineno)

    missing = [key for key in _REQUIRED_KEYS if key not in values]
    if missing:
        raise DataFileError(f"missing keys: {', '.join(missing)}", str(path))
    for manifold in ("ground", "excited"):
        if not offsets[manifold]:
            raise DataFileError(f"no {manifold}_F<k>_offset entries", str(path))

    stem_species, _, stem_line = path.stem.partition("_")
    species_name = str(values.get("species", (0, stem_species))[1])
    label = str(values.get("line", (0, stem_line or path.stem))[1])

    try:
        species = AtomicSpecies(species_name, values["nuclear_spin"][1], values["ground_J"][1])
        return AtomicLine(
            species=species,
            label=label,
            excited_J=values["excited_J"][1],
            reduced_dipole=values["reduced_dipole"][1],
            linewidth=values["linewidth"][1],
            line_center=values["line_center"][1],
            ground_hyperfine=tuple((F, o) for F, o, _ in sorted(offsets["ground"], key=lambda e: e[0])),
            excited_hyperfine=tuple((F, o) for F, o, _ in sorted(offsets["excited"], key=lambda e: e[0])),
            source=str(path),
        )
    except DomainError as e:
        raise DataFileError(str(e), str(path))


def load_line_file(path: Union[str, Path]) -> AtomicLine:
    """Parse a data file and register the line it describes"""
    return register_line(parse_line_file(path))


def data_search_path() -> List[Path]:
    """Directories searched for `<species>_<line>.txt`: ASGEM_DATA_DIR entries, then the bundled data"""
    dirs = [Path(p) for p in os.getenv(DATA_DIR_ENV, "").split(os.pathsep) if p.strip()]
    dirs.append(PACKAGE_DATA_DIR)
    return dirs


def find_line_file(species: str, line: str) -> Optional[Path]:
    wanted = f"{species}_{line}".lower()
    for directory in data_search_path():
        if not directory.is_dir():
            continue
        for candidate in sorted(directory.glob("*.txt")):
            if candidate.stem.lower() == wanted:
                return candidate
    return None


def load_line(species: str = "rb87", line: str = "D1") -> AtomicLine:
    """
    Look up a line in the registry, falling back to the data search path

    Raises:
        UnknownLineError: the pair is neither registered nor found on disk
        DataFileError: the matching data file is malformed
    """
    key = _key(species, line)
    if key in _REGISTRY:
        return _REGISTRY[key]

    path = find_line_file(species, line)
    if path is None:
        searched = ", ".join(str(d) for d in data_search_path())
        raise UnknownLineError(f"unknown line {species}/{line} (searched: {searched})")

    logger.info(f"Loading line {species}/{line} from {path}")
    loaded = parse_line_file(path)
    if _key(loaded.species.name, loaded.label) != key:
        raise DataFileError(
            f"file declares {loaded.species.name}/{loaded.label}, expected {species}/{line}", str(path)
        )
    return register_line(loaded)


def same_ground_manifold(a: AtomicLine, b: AtomicLine) -> bool:
    """Whether two lines share one ground manifold (needed to sum their contributions)"""
    return (
        a.species.nuclear_spin == b.species.nuclear_spin
        and a.ground_J == b.ground_J
        and len(a.ground_hyperfine) == len(b.ground_hyperfine)
        and all(
            Fa == Fb and abs(oa - ob) <= 1e-6 * max(abs(oa), 1.0)
            for (Fa, oa), (Fb, ob) in zip(a.ground_hyperfine, b.ground_hyperfine)
        )
    )


def collapsed_line(template: AtomicLine, label: str = "two-level") -> AtomicLine:
    """
    Strip the hyperfine structure from a line: I = 0, J = J' = 1/2, offsets 0

    Used for the two-level reductions of the shift and scattering formulas.
    """
    half = HalfInt.of("1/2")
    species = AtomicSpecies(name=f"{template.species.name}-collapsed", nuclear_spin=HalfInt(0), ground_J=half)
    return AtomicLine(
        species=species,
        label=label,
        excited_J=half,
        reduced_dipole=template.reduced_dipole,
        linewidth=template.linewidth,
        line_center=template.line_center,
        ground_hyperfine=((half, 0.0),),
        excited_hyperfine=((half, 0.0),),
        source="collapsed",
    )
