from __future__ import annotations

from typing import Any


class SqgLabError(Exception):
    """Base class for every error raised by sqglab."""


class ConfigurationError(SqgLabError, ValueError):
    pass


class DomainError(SqgLabError, ValueError):
    """An operator was applied outside the set of fields it is defined on."""


class UnsupportedScaleError(SqgLabError, ValueError):
    pass


class UnsupportedMapError(SqgLabError, ValueError):
    pass


class UndefinedRatioError(SqgLabError, ArithmeticError):
    pass


class IncompleteLedgerError(SqgLabError, LookupError):
    pass


class SnapshotError(SqgLabError, OSError):
    pass


class CFLViolation(ConfigurationError):
    def __init__(self, dt: float, required_dt: float):
        self.dt = dt
        self.required_dt = required_dt
        super().__init__(f"dt={dt:.3e} violates the CFL condition; use dt <= {required_dt:.3e}")


class BlowupError(SqgLabError, RuntimeError):
    """Raised when a run produced NaN or grew past the blowup threshold.

    `state` holds the last valid state so callers can persist it.
    """

    def __init__(self, message: str, state: Any = None):
        super().__init__(message)
        self.state = state
