"""
Exception hierarchy for the delta-cone toolkit.

Every error raised on purpose by the library derives from DeltaConeError, so
callers (and the CLI exit-code mapping) can tell configuration problems,
geometric domain violations and numerical failures apart.
"""

from typing import Optional


class DeltaConeError(Exception):
    """Base class for all library errors."""


class ConfigError(DeltaConeError, ValueError):
    """Invalid or contradictory run configuration."""


class DomainError(DeltaConeError, ValueError):
    """A parameter lies outside the domain of the requested operation."""


class InfeasibleShapeError(DomainError):
    """No loop of the requested family reaches the target length."""


class InvalidShapeError(DomainError):
    """A loop violates regularity (leaves the polar range or self-intersects)."""


class SingularArgumentError(DomainError):
    """An evaluation point sits on a kernel singularity."""


class MisuseError(DeltaConeError, ValueError):
    """An operation was called on inputs it is not defined for."""


class GridError(DeltaConeError, ValueError):
    """Quadrature grid is inconsistent (e.g. two distinct nodes coincide)."""


class NumericError(DeltaConeError, RuntimeError):
    """An iterative method failed to converge."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AccuracyError(NumericError):
    """A quadrature did not reach the requested accuracy.

    Carries the coarse and fine estimates so callers can report both.
    """

    def __init__(self, message: str, coarse: float, fine: float):
        super().__init__(message, {"coarse": coarse, "fine": fine})
        self.coarse = coarse
        self.fine = fine


class NoBoundStateError(NumericError):
    """A ground state was requested for a coupling below the critical one."""
