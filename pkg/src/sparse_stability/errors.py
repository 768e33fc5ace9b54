"""Exceptions raised by the stability radius solver."""

from typing import Any, List, Optional


class StabilityRadiusError(Exception):
    """Base class for all solver and verifier errors."""


class ProblemFormatError(StabilityRadiusError, ValueError):
    """A problem or perturbation file could not be parsed."""

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        if line is not None:
            location = f"line {line}" + (f", column {column}" if column else "")
            message = f"{message} ({location})"
        super().__init__(message)


class AssumptionError(StabilityRadiusError):
    """A standing assumption of the problem does not hold."""


class UnstableSystemError(AssumptionError):
    """The nominal matrix A is not stable, so the radius is zero."""


class RankConditionError(AssumptionError):
    """CX stayed rank deficient after every jitter attempt."""


class NotBoundaryPointError(StabilityRadiusError):
    """No eigenvalue of A(Delta) lies close enough to j*omega."""


class ConvergenceError(StabilityRadiusError):
    """The descent produced a non-finite cost."""

    def __init__(self, message: str, trace: Optional[List[Any]] = None):
        super().__init__(message)
        self.trace = list(trace or [])


class SearchBoundError(StabilityRadiusError):
    """The brute-force oracle found no instability within its search bound."""


class NumericalError(StabilityRadiusError):
    """A dense factorization or decomposition broke down."""


class RegularityError(StabilityRadiusError):
    """The constraint Jacobian is rank deficient, so the second-order test is inconclusive."""
