"""Exception hierarchy for homoflow."""


class HomoflowError(Exception):
    """Base class for all library errors."""


class InvalidInputError(HomoflowError, ValueError):
    """Raised for non-finite data, bad shapes or out-of-domain parameters."""


class SteadyStateError(HomoflowError):
    """Raised when an operation needs a nonzero operator value but P(psi) = 0."""


class DivergenceError(HomoflowError):
    """Raised when an explicit evolution produces non-finite values."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state encountered at step {step}")


class NonUniformSequenceError(HomoflowError, ValueError):
    """Raised when DMD receives a sequence that is not uniformly sampled.

    Rescale the time axis and resample (see :mod:`homoflow.rescale`) first.
    """


class NonDissipativeError(HomoflowError):
    """Raised by blind rescaling when <psi_{k+1} - psi_k, psi_k> >= 0."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"non-dissipative step at index {index}")


class UndefinedEigenvalueError(HomoflowError, ArithmeticError):
    """Raised when a nonlinear eigenvalue estimate has a degenerate denominator."""
