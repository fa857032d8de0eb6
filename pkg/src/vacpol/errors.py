"""Exception hierarchy shared by every numerical module."""


class VacpolError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(VacpolError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(DomainError):
    """The requested value is a genuine singularity (e.g. Coulomb at r = 0)."""


class UnsupportedOperationError(VacpolError):
    """The operation does not exist for this kind of object."""


class SupercriticalError(DomainError):
    """Coupling alpha*Z >= 1, outside the regime the construction covers."""


class QuadratureError(VacpolError, ArithmeticError):
    """A quadrature failed to reach its tolerance.

    Attributes
    ----------
    estimate : float
        The achieved absolute error estimate.
    """

    def __init__(self, message, estimate=float("nan")):
        super().__init__(f"{message} (achieved error estimate {estimate:.3e})")
        self.estimate = estimate


class ConvergenceError(QuadratureError):
    """An iterative refinement stopped at its cap before meeting tolerance."""


class InvariantViolation(VacpolError, AssertionError):
    """Two algebraically identical routes disagreed beyond tolerance."""


class GapCrossingError(VacpolError):
    """An eigenvalue sits too close to zero for the projector to be defined."""


class CoverageError(VacpolError):
    """A tabulated function does not cover the support it is integrated against."""
