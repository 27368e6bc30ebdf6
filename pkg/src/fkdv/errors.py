"""Exception types raised by the solvers."""


class FKdVError(RuntimeError):
    """Base class for all numerical failures in this package."""


class DomainError(FKdVError, ValueError):
    """An operator was applied outside the set where it is defined."""


class ContinuationError(FKdVError):
    """Newton continuation of the wave family failed."""


class EigenSolverError(FKdVError):
    """The dense eigensolver did not converge."""


class ReductionError(FKdVError):
    """The critical three-dimensional reduction could not be formed."""


class ValidationError(FKdVError):
    """An invariant check failed."""
