"""Exception and warning types shared across the package."""


class SpectralBarrierError(Exception):
    """Base class for all package errors."""


class InvalidParameter(SpectralBarrierError, ValueError):
    """An argument is outside its documented domain."""


class DimensionMismatch(SpectralBarrierError, ValueError):
    """Vector/matrix dimensions are incompatible."""


class NotPositiveDefinite(SpectralBarrierError):
    """A - l*I is not positive definite (the shift l is at or above the
    smallest eigenvalue, or numerically indistinguishable from it)."""


class InvariantViolation(SpectralBarrierError):
    """A barrier-state invariant failed; the certificate cannot be trusted."""


class PreconditionViolated(SpectralBarrierError):
    """A bound was requested outside the regime where it says anything."""


class ConvergenceFailure(SpectralBarrierError):
    """The underlying eigensolver did not converge."""


class NotAvailable(SpectralBarrierError):
    """No closed-form moment values exist for the requested family."""


class EstimateUnstable(UserWarning):
    """A Monte Carlo estimate has a bootstrap CI wider than 20% of its value.

    Reported (as a warning and a flag on the value), never fatal.
    """
