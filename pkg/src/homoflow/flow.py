"""Explicit evolution of homogeneous flows and their closed-form decay."""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import (
    check_count,
    check_delta,
    check_homogeneity,
    check_positive,
    check_signal,
    inner,
    sq_norm,
)
from .exceptions import DivergenceError, InvalidInputError

__all__ = [
    "FlowParams",
    "SnapshotSequence",
    "Uniform",
    "Adaptive",
    "decay_profile",
    "extinction_time",
    "evolve_fixed",
    "evolve_adaptive",
    "synth_eigenflow",
]

_UNIFORM_RTOL = 1e-12


@dataclass(frozen=True)
class FlowParams:
    """Eigenvalue ``lam <= 0``, homogeneity ``p`` and ``||f||^2`` of a separable flow."""

    lam: float
    p: float
    f_norm_sq: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam <= 0):
            raise InvalidInputError(f"lam must be finite and <= 0, got {self.lam}")
        check_homogeneity(self.p)
        check_positive(self.f_norm_sq, "f_norm_sq")


@dataclass
class SnapshotSequence:
    """Snapshots ``psi_0 .. psi_N`` stacked along axis 0, with ``N`` step sizes.

    ``terminated`` is set when an adaptive evolution reached the steady state
    before the requested number of steps.
    """

    snapshots: np.ndarray
    dts: np.ndarray
    terminated: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.snapshots = np.asarray(self.snapshots, dtype=float)
        self.dts = np.atleast_1d(np.asarray(self.dts, dtype=float))
        if self.snapshots.ndim < 2:
            raise InvalidInputError("snapshots must be stacked along axis 0")
        if len(self.dts) != len(self.snapshots) - 1:
            raise InvalidInputError(
                f"expected {len(self.snapshots) - 1} step sizes, got {len(self.dts)}"
            )
        if np.any(~np.isfinite(self.dts)) or np.any(self.dts <= 0):
            raise InvalidInputError("all step sizes must be positive and finite")

    def __len__(self):
        return len(self.snapshots)

    @property
    def shape(self):
        return self.snapshots.shape[1:]

    @property
    def n_steps(self):
        return len(self.dts)

    @property
    def times(self):
        return np.concatenate([[0.0], np.cumsum(self.dts)])

    @property
    def uniform(self):
        if len(self.dts) == 0:
            return True
        return bool(np.all(np.abs(self.dts - self.dts[0]) <= _UNIFORM_RTOL * self.dts[0]))

    def as_uniform(self, dt=1.0):
        """Same snapshots relabeled with a constant step ``dt``.

        Adaptive sequences are uniform in rescaled time; the original times
        are kept in ``meta["source_times"]``.
        """
        out = SnapshotSequence(self.snapshots, np.full(self.n_steps, float(dt)))
        out.meta["source_times"] = self.times
        return out

    def flat(self):
        """Snapshots as the ``M x (N+1)`` column matrix."""
        return self.snapshots.reshape(len(self), -1).T


@dataclass(frozen=True)
class Uniform:
    dt: float
    n_steps: int


@dataclass(frozen=True)
class Adaptive:
    delta: float
    n_steps: int


def decay_profile(t, params):
    """``[(1 + (2-p) lam t)^+]^(1/(2-p))``; vectorized over ``t``."""
    p = check_homogeneity(params.p)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInputError("time must be nonnegative")
    base = np.maximum(1.0 + (2.0 - p) * params.lam * t, 0.0)
    out = base ** (1.0 / (2.0 - p))
    return float(out) if out.ndim == 0 else out


def extinction_time(params):
    """``-1 / (lam (2 - p))``, or ``inf`` for ``lam = 0``."""
    p = check_homogeneity(params.p)
    if params.lam == 0:
        return math.inf
    return -1.0 / (params.lam * (2.0 - p))


def _apply(op, psi):
    return op.apply(psi) if hasattr(op, "apply") else op(psi)


def evolve_fixed(f, op, dt, steps):
    """``psi_{k+1} = psi_k + P(psi_k) dt`` for ``steps`` steps.

    Stability of the fixed step is the caller's responsibility.
    """
    f = check_signal(f, "f")
    dt = check_positive(dt, "dt")
    steps = check_count(steps, "steps", minimum=0)
    out = np.empty((steps + 1,) + f.shape)
    out[0] = f
    for k in range(steps):
        nxt = out[k] + _apply(op, out[k]) * dt
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError(k + 1)
        out[k + 1] = nxt
    return SnapshotSequence(out, np.full(steps, dt))


def evolve_adaptive(f, op, delta, steps, zero_tol=1e-13):
    """Explicit scheme with ``dt_k = -<P(psi_k), psi_k> / ||P(psi_k)||^2 * delta``.

    Stops early, with ``terminated=True``, once ``P(psi_k)`` vanishes or the
    state has decayed below ``zero_tol * ||f||``; the returned sequence is the
    prefix computed so far. A zero initial condition gives a single snapshot.
    """
    f = check_signal(f, "f")
    delta = check_delta(delta)
    steps = check_count(steps, "steps", minimum=0)
    f_norm = math.sqrt(sq_norm(f))
    snaps = [f]
    dts = []
    terminated = False
    psi = f
    for k in range(steps):
        if math.sqrt(sq_norm(psi)) <= zero_tol * f_norm or f_norm == 0.0:
            terminated = True
            break
        p_psi = _apply(op, psi)
        denom = sq_norm(p_psi)
        if denom == 0.0:
            terminated = True
            break
        dt = -inner(p_psi, psi) / denom * delta
        if not (np.isfinite(dt) and dt > 0):
            terminated = True
            break
        psi = psi + p_psi * dt
        if not np.all(np.isfinite(psi)):
            raise DivergenceError(k + 1)
        snaps.append(psi)
        dts.append(dt)
    return SnapshotSequence(np.stack(snaps), np.asarray(dts), terminated=terminated)


def synth_eigenflow(f, params, sampling):
    """Exact samples ``a(t_k) f`` of the separable flow started at eigenfunction ``f``.

    ``Uniform(dt, n)`` samples at ``t_k = k dt``. ``Adaptive(delta, n)`` samples at
    ``t_k = (|1-delta|^(k(2-p)) - 1) / (lam (2-p))`` where ``a(t_k) = |1-delta|^k``.
    """
    f = check_signal(f, "f")
    p = params.p
    if isinstance(sampling, Uniform):
        dt = check_positive(sampling.dt, "dt")
        n = check_count(sampling.n_steps, "n_steps")
        a = decay_profile(np.arange(n + 1) * dt, params)
        dts = np.full(n, dt)
    elif isinstance(sampling, Adaptive):
        delta = check_delta(sampling.delta)
        n = check_count(sampling.n_steps, "n_steps")
        if params.lam == 0:
            raise InvalidInputError("adaptive sampling needs lam < 0")
        if delta == 1.0:
            raise InvalidInputError("delta = 1 reaches extinction in one sample")
        q = abs(1.0 - delta)
        k = np.arange(n + 1)
        a = q**k
        c = params.lam * (2.0 - p)
        times = (q ** (k * (2.0 - p)) - 1.0) / c
        dts = np.diff(times)
    else:
        raise InvalidInputError(f"unknown sampling {sampling!r}")
    snaps = np.multiply.outer(np.asarray(a, dtype=float), f)
    seq = SnapshotSequence(snaps, dts)
    seq.meta["decay"] = np.asarray(a, dtype=float)
    return seq
