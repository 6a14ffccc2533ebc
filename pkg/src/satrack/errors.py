"""Shared exception types."""


class SatrackError(Exception):
    """Base class for library errors."""


class GradientBoundError(SatrackError, ValueError):
    """A loss gradient exceeded the bound declared at construction."""


class ActionBoundError(SatrackError, ValueError):
    """An action exceeded the admissible norm bound."""


class WealthSolveError(SatrackError, ArithmeticError):
    """Neither sign branch of the wealth fixed point is self-consistent.

    Indicates a violated precondition (betting fractions outside their
    clipped ranges, or nonpositive incoming wealth).
    """


class HorizonError(SatrackError, ValueError):
    """A round index beyond the configured horizon was requested."""


class AuditViolation(SatrackError, AssertionError):
    """Raised by the harness when --audit finds a broken invariant."""
