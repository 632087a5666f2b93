"""
Unit-aware parsing for ASGEM

One parser serves the atomic data files, the flat `key = value unit` config files
and the CLI flags. Quantities are converted to SI on ingest; every frequency given
in a Hz-family unit is a linear frequency and is multiplied by 2*pi, so the rest
of the code only sees angular frequencies.
"""

import math
import re
from pathlib import Path
from typing import Dict, List, Tuple, Union

from errors import DataFileError, UnitError

TWO_PI = 2.0 * math.pi

# ────────────────────────────── Unit tables ────────────────────────────── #
# Factors convert to SI (rad/s for frequencies).
FREQUENCY_UNITS: Dict[str, float] = {
    "hz": TWO_PI,
    "khz": TWO_PI * 1e3,
    "mhz": TWO_PI * 1e6,
    "ghz": TWO_PI * 1e9,
    "thz": TWO_PI * 1e12,
    "rad/s": 1.0,
}

DIPOLE_UNITS: Dict[str, float] = {
    "c·m": 1.0,
    "c*m": 1.0,
    "c.m": 1.0,
    "c m": 1.0,
}

LENGTH_UNITS: Dict[str, float] = {
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
}

INTENSITY_UNITS: Dict[str, float] = {
    "w/m2": 1.0,
    "w/m^2": 1.0,
    "w/m²": 1.0,
    "w/cm2": 1e4,
    "w/cm^2": 1e4,
    "w/cm²": 1e4,
}

UNIT_TABLES: Dict[str, Dict[str, float]] = {
    "frequency": FREQUENCY_UNITS,
    "dipole": DIPOLE_UNITS,
    "length": LENGTH_UNITS,
    "intensity": INTENSITY_UNITS,
}

# Kinds that accept a bare number as an SI value
BARE_NUMBER_KINDS = {"length", "intensity", "dimensionless"}

_QUANTITY_RE = re.compile(
    r"^\s*(?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(?P<unit>.*?)\s*$"
)

Number = Union[int, float]


def parse_quantity(text: str, kind: str) -> float:
    """
    Parse a number with an optional unit into SI

    Args:
        text: e.g. "1064nm", "5e13", "200 MHz", "2.5377e-29 C·m"
        kind: one of frequency, dipole, length, intensity, dimensionless

    Returns:
        The value in SI units (rad/s for frequencies)
    """
    match = _QUANTITY_RE.match(str(text))
    if not match:
        raise UnitError(f"cannot parse quantity {text!r}")

    value = float(match.group("number"))
    unit = match.group("unit").strip().lower()

    if not unit:
        # zero needs no unit
        if kind in BARE_NUMBER_KINDS or value == 0:
            return value
        raise UnitError(f"{kind} quantity {text!r} needs a unit")

    if kind == "dimensionless":
        raise UnitError(f"dimensionless quantity {text!r} must not carry a unit")

    table = UNIT_TABLES.get(kind)
    if table is None:
        raise UnitError(f"unknown quantity kind {kind!r}")
    if unit not in table:
        raise UnitError(f"unsupported {kind} unit {match.group('unit')!r} in {text!r}")
    return value * table[unit]


def parse_range(text: str, kind: str) -> Tuple[float, float]:
    """Parse `lo:hi` (or a single value) into a pair of SI values"""
    parts = str(text).split(":")
    if len(parts) == 1:
        value = parse_quantity(parts[0], kind)
        return value, value
    if len(parts) != 2:
        raise UnitError(f"range {text!r} must look like lo:hi")
    return parse_quantity(parts[0], kind), parse_quantity(parts[1], kind)


def parse_kv_file(path: Union[str, Path]) -> List[Tuple[int, str, str]]:
    """
    Read a UTF-8 `key = value unit` file

    Blank lines and `#` comments are skipped. Returns (lineno, key, raw_value)
    triples in file order; duplicate keys are rejected.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataFileError(f"cannot read file: {e}", path=str(path))

    entries: List[Tuple[int, str, str]] = []
    seen: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFileError(f"expected 'key = value', got {raw.strip()!r}", str(path), lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise DataFileError(f"empty key or value in {raw.strip()!r}", str(path), lineno)
        if key in seen:
            raise DataFileError(f"duplicate key {key!r} (first on line {seen[key]})", str(path), lineno)
        seen[key] = lineno
        entries.append((lineno, key, value))
    return entries


# ────────────────────────────── Display ────────────────────────────────── #
def format_frequency(omega: float, digits: int = 6) -> str:
    """Render an angular frequency as a linear frequency with an SI prefix"""
    nu = omega / TWO_PI
    magnitude = abs(nu)
    for unit, scale in (("THz", 1e12), ("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3)):
        if magnitude >= scale:
            return f"{nu / scale:.{digits}g} {unit}"
    return f"{nu:.{digits}g} Hz"
