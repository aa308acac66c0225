"""Asymptotic and reference solutions for shock formation in viscous Burgers
flow, parabolic traveling-wave corrections and KdV dispersive shock waves."""

__version__ = "0.1.0"

from . import burgers, kdv, parabolic, reference, specfun  # noqa: E402,F401
from .errors import (AmbiguousPointError, CFLViolation, DegenerateStatesError,  # noqa: E402,F401
                     DivergenceError, DomainError, NoRealCriticalPoints, PreconditionError,
                     SolvabilityError, SolverInstability, ToleranceNotMet)
