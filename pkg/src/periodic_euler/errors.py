"""Exception taxonomy shared across the package.

ValidationError covers rejected inputs (bad physics parameters, violated
preconditions); AdmissibilityError marks states leaving the subsonic
neighborhood. NonConvergenceError subclasses carry a partial report when one
is available, so callers can still inspect diagnostics after a failed solve.
"""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class AdmissibilityError(ValidationError):
    """A state left the admissible subsonic neighborhood."""


class InsufficientDataError(ValidationError):
    """Not enough samples/windows to perform the requested fit."""


class NonConvergenceError(RuntimeError):
    """An iterative solve failed; `report` holds partial diagnostics."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonContractionError(NonConvergenceError):
    """Successive iterate differences grew over several iterations."""


class MaxIterationsError(NonConvergenceError):
    """The iteration cap was reached before the tolerance was met."""


class PredictorCorrectorError(NonConvergenceError):
    """The per-cell implicit source term did not settle within 8 passes."""


class CFLViolationError(RuntimeError):
    """A time step exceeded the allowed CFL fraction."""
