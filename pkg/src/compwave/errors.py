"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where an operation is defined."""


class DivergenceError(DomainError):
    """The requested quantity is infinite at this argument."""


class NoRealCriticalPoints(DomainError):
    """Negative discriminant: the point lies beyond the caustic."""


class AmbiguousPointError(ValueError):
    """Point sits exactly on a discontinuity; both one-sided values attached."""

    def __init__(self, message, left, right):
        super().__init__(message)
        self.left = left
        self.right = right


class DegenerateStatesError(ValueError):
    """Left and right Riemann states coincide."""


class ToleranceNotMet(RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    ``best_estimate`` carries whatever the procedure produced anyway.
    """

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class PreconditionError(ValueError):
    """Input violates a documented precondition (e.g. non-decaying tails)."""


class SolvabilityError(ValueError):
    """The solvability condition fails; ``functional`` holds its value."""

    def __init__(self, message, functional):
        super().__init__(message)
        self.functional = functional


class CFLViolation(ValueError):
    """Time step too large for the explicit part of a solver."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SolverInstability(RuntimeError):
    """A time integration produced non-finite values."""
