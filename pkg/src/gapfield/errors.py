"""Exception types shared across the package.

Every failure mode that a caller may want to act on gets its own class; they
all derive from :class:`GapFieldError` so a CLI can map them to exit codes.
"""


class GapFieldError(Exception):
    """Base class for all package errors."""


class DomainError(GapFieldError, ValueError):
    """An argument lies outside the domain of a formula (pole, inside a ball)."""


class ConvergenceError(GapFieldError, RuntimeError):
    """An iterative construction exceeded its term or generation cap."""


class AccuracyError(GapFieldError, RuntimeError):
    """A built-in self-check (constancy, flux agreement) failed."""


class ResolutionError(GapFieldError, ValueError):
    """Input data is not resolved by the requested harmonic degree."""


class RegimeError(GapFieldError, ValueError):
    """A point or parameter falls outside the regime an estimate applies to."""


class ScopeError(RegimeError):
    """A requested check lies outside the supported scope (e.g. BEM gap range)."""


class ConsistencyError(GapFieldError, RuntimeError):
    """Two independent routes disagree beyond tolerance."""


class NumericalError(GapFieldError, RuntimeError):
    """A linear solve failed or left a residual above tolerance."""
