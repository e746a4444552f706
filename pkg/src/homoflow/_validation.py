"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np

from .exceptions import InvalidInputError


def check_signal(psi, name="psi", allow_ndim=(1, 2)):
    """Return ``psi`` as a float64 array after checking shape and finiteness."""
    arr = np.asarray(psi, dtype=float)
    if arr.ndim not in allow_ndim:
        raise InvalidInputError(
            f"{name} must have ndim in {allow_ndim}, got shape {arr.shape}"
        )
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def check_homogeneity(p, upper_inclusive=False):
    p = float(p)
    ok = 1.0 <= p <= 2.0 if upper_inclusive else 1.0 <= p < 2.0
    if not ok:
        bound = "]" if upper_inclusive else ")"
        raise InvalidInputError(f"p must lie in [1, 2{bound}, got {p}")
    return p


def check_delta(delta):
    delta = float(delta)
    if not 0.0 < delta < 2.0:
        raise InvalidInputError(f"delta must lie in (0, 2), got {delta}")
    return delta


def check_positive(value, name):
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise InvalidInputError(f"{name} must be a positive finite number, got {value}")
    return value


def check_count(value, name, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def inner(u, v):
    """Unweighted flat inner product of two grid fields."""
    return float(np.vdot(np.ravel(u), np.ravel(v)).real)


def sq_norm(u):
    return inner(u, u)
