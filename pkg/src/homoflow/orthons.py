"""Orthogonal nonlinear spectral decomposition (OrthoNS).

Pipeline: homogeneity-normalized snapshots (adaptive evolution, or posterior
rescaling plus uniform resampling) -> symmetric DMD -> one nonlinear
eigenvalue per orthonormal mode. The result supports flow synthesis,
a spectrum of (extinction time, power) pairs and linear filtering.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_delta, check_homogeneity, check_signal, inner, sq_norm
from .dmd import DEFAULT_TOL, sdmd
from .exceptions import InvalidInputError, UndefinedEigenvalueError
from .flow import _apply, evolve_adaptive
from .rescale import rescale_blind, rescale_known, resample_uniform

__all__ = [
    "OrthoNsDecomposition",
    "orthons",
    "orthons_posterior",
    "lambda_from_mode",
    "lambda_from_mu",
    "reconstruct_flow",
    "spectrum",
    "filter_modes",
    "band_filter",
    "eigen_residuals",
]

EIGENVALUE_METHODS = ("auto", "mu", "mode")


@dataclass
class OrthoNsDecomposition:
    """Modes (columns, orthonormal), eigenvalues, coordinates and extinction times.

    Non-physical modes (DMD eigenvalue outside ``(0, 1)``) are kept with
    ``lambdas = -inf`` and ``ext_times = 0``; ``physical`` flags the rest.
    """

    modes: np.ndarray
    lambdas: np.ndarray
    alphas: np.ndarray
    ext_times: np.ndarray
    p: float
    delta: float
    shape: tuple
    mus: np.ndarray = None
    physical: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        r = len(self.alphas)
        self.shape = tuple(int(s) for s in self.shape)
        self.modes = np.asarray(self.modes, dtype=float).reshape(int(np.prod(self.shape)), r)
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.ext_times = np.asarray(self.ext_times, dtype=float)
        if self.mus is None:
            self.mus = np.full(r, np.nan)
        if self.physical is None:
            self.physical = np.isfinite(self.lambdas)

    @property
    def rank(self):
        return len(self.alphas)

    def mode(self, i):
        return self.modes[:, i].reshape(self.shape)

    @property
    def f_hat(self):
        return (self.modes @ self.alphas).reshape(self.shape)


def _ext_time(lam, p):
    if not np.isfinite(lam):
        return 0.0
    if lam == 0:
        return math.inf
    return -1.0 / (lam * (2.0 - p))


def lambda_from_mode(phi, mu, delta, op):
    """``(1 - mu) / delta * ||P(phi)||^2 / <P(phi), phi>``.

    The eigenvalue of the signal ``phi`` as passed; for ``p != 2`` it depends
    on the scale of ``phi``.
    """
    p_phi = _apply(op, phi)
    num = sq_norm(p_phi)
    den = inner(p_phi, phi)
    if num == 0.0 or den == 0.0:
        if mu == 1.0:
            return 0.0
        raise UndefinedEigenvalueError("P(phi) is zero or orthogonal to phi")
    return (1.0 - mu) / delta * num / den


def lambda_from_mu(mu, times, p):
    """Least-squares fit of ``a(t_k)^(2-p) ~ mu^(k(2-p))`` over the eigenvalue.

    ``times`` are the original (unrescaled) times of the analyzed samples.
    """
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        raise InvalidInputError("need at least two time points")
    if not mu > 0:
        raise InvalidInputError("lambda_from_mu needs mu > 0")
    denom = (2.0 - p) * float(t @ t)
    if denom == 0.0:
        raise UndefinedEigenvalueError("all time points are zero")
    k = np.arange(len(t))
    return float(np.sum(mu ** (k * (2.0 - p)) * t) - np.sum(t)) / denom


def _assemble(res, p, delta, times, op, method, scale_mode_by_alpha=True):
    if method not in EIGENVALUE_METHODS:
        raise InvalidInputError(f"eigenvalue method must be one of {EIGENVALUE_METHODS}")
    if method == "auto":
        method = "mode" if op is not None else "mu"
    if method == "mode" and op is None:
        raise InvalidInputError("eigenvalue method 'mode' needs the operator")
    mus = np.real(res.mu).astype(float)
    alphas = np.real(res.alpha).astype(float)
    r = len(mus)
    lam_mu = np.full(r, -np.inf)
    lam_mode = np.full(r, -np.inf)
    physical = (mus > 0) & (mus < 1)
    for i in range(r):
        if not physical[i]:
            continue
        lam_mu[i] = lambda_from_mu(mus[i], times, p)
        if op is not None:
            phi = res.modes[:, i].reshape(res.shape)
            if scale_mode_by_alpha:
                phi = alphas[i] * phi
            try:
                lam_mode[i] = lambda_from_mode(phi, mus[i], delta, op)
            except UndefinedEigenvalueError:
                lam_mode[i] = -np.inf
    lambdas = lam_mode if method == "mode" else lam_mu
    physical &= np.isfinite(lambdas) & (lambdas < 0)
    lambdas = np.where(physical, lambdas, -np.inf)
    ext = np.array([_ext_time(l, p) for l in lambdas])
    extra = {"method": method, "lambdas_mu": lam_mu}
    if op is not None:
        extra["lambdas_mode"] = lam_mode
    return OrthoNsDecomposition(
        modes=np.real(res.modes),
        lambdas=lambdas,
        alphas=alphas,
        ext_times=ext,
        p=p,
        delta=delta,
        shape=res.shape,
        mus=mus,
        physical=physical,
        extra=extra,
    )


def _empty(shape, p, delta):
    return OrthoNsDecomposition(
        modes=np.zeros((int(np.prod(shape)), 0)),
        lambdas=np.zeros(0),
        alphas=np.zeros(0),
        ext_times=np.zeros(0),
        p=p,
        delta=delta,
        shape=shape,
    )


def orthons(f, op, delta=0.5, steps=200, rank=None, tol=DEFAULT_TOL, eigenvalue="auto"):
    """Decompose ``f`` under the flow of ``op`` (prior time rescaling).

    The flow is evolved with the adaptive step, the snapshots are analyzed
    with symmetric DMD, and each mode gets a nonlinear eigenvalue. With
    ``eigenvalue="auto"`` the mode-based estimate is used, evaluated on the
    weighted mode ``alpha_i phi_i``; ``"mu"`` uses the decay-profile fit.
    Both estimates are stored in ``extra``.
    """
    f = check_signal(f, "f")
    delta = check_delta(delta)
    p = check_homogeneity(op.p)
    seq = evolve_adaptive(f, op, delta, steps)
    if len(seq) < 2 or not np.any(seq.snapshots[:-1]):
        return _empty(f.shape, p, delta)
    res = sdmd(seq.as_uniform(delta), rank=rank, tol=tol)
    dec = _assemble(res, p, delta, seq.times, op, eigenvalue)
    dec.extra["sequence"] = seq
    return dec


def orthons_posterior(
    seq,
    p,
    op=None,
    rank=None,
    tol=DEFAULT_TOL,
    samples=None,
    eigenvalue="auto",
    on_nondissipative="error",
):
    """Decompose recorded snapshots (posterior time rescaling).

    With ``op`` the grid comes from the known operator and step sizes,
    otherwise from snapshot differences alone. After uniform resampling the
    rescaled step plays the role of ``delta``. The decay-profile fit uses
    the original times of the resampled points, interpolated from ``seq.dts``.
    """
    p = check_homogeneity(p)
    if op is not None:
        grid = rescale_known(seq, op)
    else:
        grid = rescale_blind(seq, on_nondissipative=on_nondissipative)
    if len(grid) < 2:
        return _empty(seq.shape, p, math.nan)
    uni = resample_uniform(seq, grid, samples)
    step = float(uni.dts[0])
    res = sdmd(uni, rank=rank, tol=tol)
    dec = _assemble(res, p, step, uni.meta["source_times"], op, eigenvalue)
    dec.extra["grid"] = grid
    dec.extra["sequence"] = uni
    return dec


def reconstruct_flow(dec, t):
    """``sum_i alpha_i phi_i [(1 + lam_i (2-p) t)^+]^(1/(2-p))``."""
    if t < 0:
        raise InvalidInputError("time must be nonnegative")
    p = dec.p
    with np.errstate(invalid="ignore"):
        base = np.where(dec.physical, 1.0 + dec.lambdas * (2.0 - p) * t, 0.0)
    if t == 0:
        base = np.ones(dec.rank)
    prof = np.maximum(base, 0.0) ** (1.0 / (2.0 - p))
    return (dec.modes @ (dec.alphas * prof)).reshape(dec.shape)


def spectrum(dec):
    """``(T_i, alpha_i^2)`` pairs sorted by extinction time."""
    pairs = [(float(T), float(a * a)) for T, a in zip(dec.ext_times, dec.alphas)]
    return sorted(pairs, key=lambda pr: pr[0])


def filter_modes(dec, h):
    """``sum_i phi_i alpha_i h_i``."""
    h = np.asarray(h, dtype=float)
    if h.shape != (dec.rank,):
        raise InvalidInputError(f"filter needs {dec.rank} gains, got shape {h.shape}")
    return (dec.modes @ (dec.alphas * h)).reshape(dec.shape)


def band_filter(dec, t_min=0.0, t_max=math.inf):
    """Indicator gains for modes with ``t_min <= T_i <= t_max``."""
    return ((dec.ext_times >= t_min) & (dec.ext_times <= t_max)).astype(float)


def eigen_residuals(dec, op):
    """``||P(phi_i) - l_i phi_i|| / ||P(phi_i)||`` with ``l_i`` the mode-based eigenvalue of unit ``phi_i``."""
    out = np.full(dec.rank, np.nan)
    for i in range(dec.rank):
        if not dec.physical[i]:
            continue
        phi = dec.mode(i)
        p_phi = _apply(op, phi)
        nrm = math.sqrt(sq_norm(p_phi))
        if nrm == 0.0:
            continue
        lam = lambda_from_mode(phi, dec.mus[i], dec.delta, op)
        out[i] = math.sqrt(sq_norm(p_phi - lam * phi)) / nrm
    return out
