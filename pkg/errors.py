"""
Error hierarchy for ASGEM

Every exception raised on purpose by the simulator derives from ASGEMError so the
CLI can map it onto an exit code in one place.
"""

from typing import Optional


class ASGEMError(Exception):
    """Base class for all simulator errors"""


class DomainError(ASGEMError, ValueError):
    """Argument outside the physical domain of an operation"""


class AngularMomentumError(DomainError):
    """Invalid (j, m) pair or negative angular-momentum magnitude"""


class UnknownLineError(ASGEMError, LookupError):
    """Species/line pair not present in the registry or on the data search path"""


class DataFileError(ASGEMError, ValueError):
    """Malformed key/value data or config file"""

    def __init__(self, message: str, path: Optional[str] = None, lineno: Optional[int] = None):
        self.path = path
        self.lineno = lineno
        location = ""
        if path is not None:
            location = f"{path}:{lineno}: " if lineno is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class UnitError(DataFileError):
    """Quantity with a missing or unsupported unit"""


class ConfigError(ASGEMError, ValueError):
    """Inconsistent run configuration (degenerate ranges, invalid grids...)"""


class UndefinedCellError(ASGEMError):
    """A sweep cell whose value is undefined rather than wrong; the cell is masked"""


class ResonanceError(DomainError, UndefinedCellError):
    """Stark beam too close to a hyperfine transition for the perturbative shift"""

    def __init__(self, F, F_prime, detuning: float, message: Optional[str] = None):
        self.F = F
        self.F_prime = F_prime
        self.detuning = detuning
        super().__init__(
            message
            or f"beam is resonant with the F={F} -> F'={F_prime} transition "
            f"(detuning {detuning:.6g} rad/s)"
        )


class IntegrationError(ASGEMError, RuntimeError):
    """Maxwell-Bloch integration failed at a given (t, z)"""

    def __init__(self, message: str, t: Optional[float] = None, z: Optional[float] = None):
        self.t = t
        self.z = z
        where = ""
        if t is not None:
            where = f" at t={t:.6g} tau" + (f", z={z:.6g} L" if z is not None else "")
        super().__init__(f"{message}{where}")


class PassivityError(IntegrationError):
    """Output energy exceeds input energy beyond the numerical slack"""


class EchoTruncatedError(ASGEMError):
    """Echo has not decayed by the end of the time window"""


class CheckpointError(ASGEMError):
    """Checkpoint file is corrupted or does not match the requested sweep"""


class OutputConflictError(ASGEMError):
    """Output directory already holds results that cannot be resumed"""


# Exit codes shared with the CLI
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_OUTPUT_CONFLICT = 4
EXIT_TRUNCATED = 5


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the CLI exit code"""
    if isinstance(exc, EchoTruncatedError):
        return EXIT_TRUNCATED
    if isinstance(exc, OutputConflictError):
        return EXIT_OUTPUT_CONFLICT
    if isinstance(exc, (DomainError, ConfigError)):
        return EXIT_DOMAIN
    if isinstance(exc, (DataFileError, UnknownLineError, CheckpointError)):
        return EXIT_USAGE
    return EXIT_FAILURE
