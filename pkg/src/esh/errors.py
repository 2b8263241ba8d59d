"""Exception types shared across the package."""


class EshError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteInput(EshError):
    """A field or parameter contains NaN or Inf."""


class GridMismatch(EshError):
    """Two fields (or a field and an operator) live on different grids."""


class NotVariational(EshError):
    """An energy functional was requested outside the gradient-flow
    parameter plane alpha = beta/2."""


class UnsupportedParameters(EshError):
    """Operation restricted to a parameter subset (e.g. the spatial
    invariant requires alpha = beta = 0)."""


class DomainError(EshError):
    """Scalar argument outside the mathematical domain of the formula."""


class BlowUp(EshError):
    """Time integration produced non-finite values.

    Carries the last finite time in ``.time``.
    """

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"solution lost finiteness at t={time:g}")


class NoConvergence(EshError):
    """Newton (or root-finding) iteration exhausted its budget.

    Carries the final residual norm in ``.residual_norm`` when known.
    """

    def __init__(self, message, residual_norm=None):
        self.residual_norm = residual_norm
        super().__init__(message)


class SingularJacobian(EshError):
    """Linear solve failed inside a Newton iteration."""


class InvalidSeed(EshError):
    """Continuation seed rejected (non-finite, wrong grid, or trivial
    when a patterned state is required)."""


class StallError(EshError):
    """Continuation step size shrank below its floor without an accepted
    step.

    Carries whatever part of the branch was completed in ``.branch``
    (may be None when the very first step failed).
    """

    def __init__(self, message, branch=None):
        self.branch = branch
        super().__init__(message)


class InsufficientData(EshError):
    """A branch does not carry enough structure (folds, points, spectra)
    for the requested measurement."""


class WrongEventType(EshError):
    """Branch event at the given index is not of the kind the operation
    needs."""


class TrackingLost(EshError):
    """Eigenvalue tracking could not identify a continuation of the mode
    (best eigenfunction overlap below threshold).

    Carries the branch-point index where tracking failed in ``.index``.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"mode tracking lost at branch point {index}")


class NoRoot(EshError):
    """Sign-change search found no bracket in the scanned interval."""
