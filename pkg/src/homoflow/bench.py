"""Benchmarks: Monte-Carlo eigenvalue recovery under noise, and pipeline timing.

The noise benchmark draws snapshots of a small linear system, corrupts them
with white Gaussian noise at a prescribed SNR and compares the eigenvalue
estimates of standard and symmetric DMD. SNR is defined as
``10 log10(mean snapshot power / noise variance)`` with the noise i.i.d. per
entry and per snapshot.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import csv
import itertools
import os
import time
import warnings

import numpy as np
from scipy.stats import chi2

from ._validation import check_count
from .dmd import dmd, sdmd
from .exceptions import HomoflowError, InvalidInputError
from .flow import SnapshotSequence

__all__ = [
    "NoiseBenchConfig",
    "RootStats",
    "NoiseBenchResult",
    "noise_benchmark",
    "write_noise_csv",
    "NOISE_CSV_HEADER",
    "timing_sweep",
    "write_timing_csv",
    "loglog_slope",
    "worker_count",
]

NOISE_CSV_HEADER = [
    "method",
    "snr_db",
    "root",
    "mean_re",
    "mean_im",
    "cov_xx",
    "cov_xy",
    "cov_yy",
    "ellipse_a",
    "ellipse_b",
    "ellipse_theta",
]

_METHODS = {"dmd": dmd, "sdmd": sdmd}
_ELLIPSE_SCALE = float(chi2.ppf(0.95, df=2))
_RANK_TOL = 1e-12


class DegenerateTrial(HomoflowError):
    """A noisy draw whose snapshot matrix has lower rank than the system."""


@dataclass
class NoiseBenchConfig:
    system: np.ndarray = field(default_factory=lambda: np.array([[0.1, 0.6], [0.6, 0.1]]))
    init: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    snapshots: int = 8
    snr_db_range: tuple = (-4.0, -2.0, 0.0, 2.0, 4.0)
    trials: int = 1000
    rng_seed: int = 42

    def __post_init__(self):
        self.system = np.asarray(self.system, dtype=float)
        self.init = np.asarray(self.init, dtype=float)
        n = len(self.init)
        if self.init.ndim != 1 or self.system.shape != (n, n):
            raise InvalidInputError("system must be square and match the initial state")
        self.snapshots = check_count(self.snapshots, "snapshots", minimum=3)
        self.trials = check_count(self.trials, "trials", minimum=1)
        self.snr_db_range = tuple(float(s) for s in self.snr_db_range)

    def clean_snapshots(self):
        out = [self.init]
        for _ in range(self.snapshots - 1):
            out.append(self.system @ out[-1])
        return np.stack(out)

    @property
    def true_roots(self):
        return np.sort(np.linalg.eigvals(self.system).real)


@dataclass
class RootStats:
    """Sample statistics of the estimates matched to one true root."""

    method: str
    snr_db: float
    root: float
    mean: complex
    cov: np.ndarray
    ellipse: tuple
    abs_error: float
    max_imag: float
    samples: np.ndarray = field(repr=False, default=None)


@dataclass
class NoiseBenchResult:
    stats: list
    discarded: dict
    config: NoiseBenchConfig

    def get(self, method, snr_db, root):
        for s in self.stats:
            if s.method == method and s.snr_db == snr_db and np.isclose(s.root, root):
                return s
        raise KeyError((method, snr_db, root))

    def mean_error(self, method, snr_db):
        """Mean estimate error over roots: ``sum_j |mean_j - root_j|``."""
        return float(
            sum(abs(s.mean - s.root) for s in self.stats if s.method == method and s.snr_db == snr_db)
        )


def worker_count(default=None):
    """Thread cap from ``HOMOFLOW_THREADS``; ``0`` or unset means automatic."""
    raw = os.environ.get("HOMOFLOW_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"HOMOFLOW_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidInputError("HOMOFLOW_THREADS must be >= 0")
    if n == 0:
        n = default or min(8, os.cpu_count() or 1)
    return n


def _match(estimates, roots):
    """Assignment of estimates to roots minimizing the total distance."""
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(len(roots))):
        cost = sum(abs(estimates[perm[j]] - roots[j]) for j in range(len(roots)))
        if cost < best_cost:
            best, best_cost = perm, cost
    return np.array([estimates[i] for i in best])


def estimate_roots(snaps, method, rank=None):
    """Eigenvalues estimated from a ``(n_snapshots, dim)`` array."""
    seq = SnapshotSequence(snaps, np.ones(len(snaps) - 1))
    rank = snaps.shape[1] if rank is None else rank
    s = np.linalg.svd(snaps[:-1].T, compute_uv=False)
    if s[0] == 0 or np.sum(s / s[0] > _RANK_TOL) < rank:
        raise DegenerateTrial("snapshot matrix lost rank")
    res = _METHODS[method](seq, rank=rank, tol=_RANK_TOL)
    return np.asarray(res.mu, dtype=complex)


def _trial(cfg, clean, sigma, seed, methods, roots):
    rng = np.random.default_rng(seed)
    noisy = clean + sigma * rng.standard_normal(clean.shape)
    out = {}
    for m in methods:
        try:
            mu = estimate_roots(noisy, m)
        except (HomoflowError, np.linalg.LinAlgError):
            out[m] = None
            continue
        if len(mu) != len(roots) or not np.all(np.isfinite(mu)):
            out[m] = None
            continue
        out[m] = _match(mu, roots)
    return out


def _ellipse(cov):
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    a = float(np.sqrt(_ELLIPSE_SCALE * vals[1]))
    b = float(np.sqrt(_ELLIPSE_SCALE * vals[0]))
    theta = float(np.arctan2(vecs[1, 1], vecs[0, 1]))
    return a, b, theta


def noise_benchmark(cfg=None, methods=("dmd", "sdmd"), keep_samples=False):
    """Monte-Carlo statistics of DMD eigenvalue estimates per method, SNR and root.

    Each trial uses its own generator spawned from ``cfg.rng_seed``, so the
    statistics do not depend on the number of worker threads. Trials where
    a method loses rank are dropped and counted in ``discarded``.
    """
    cfg = NoiseBenchConfig() if cfg is None else cfg
    methods = tuple(methods)
    for m in methods:
        if m not in _METHODS:
            raise InvalidInputError(f"unknown method {m!r}")
    clean = cfg.clean_snapshots()
    power = float(np.mean(np.sum(clean**2, axis=1)))
    roots = cfg.true_roots
    root_seq = np.random.SeedSequence(cfg.rng_seed)
    snr_seeds = root_seq.spawn(len(cfg.snr_db_range))
    stats, discarded = [], {}
    with warnings.catch_warnings(), ThreadPoolExecutor(max_workers=worker_count()) as pool:
        warnings.simplefilter("ignore", RuntimeWarning)
        for snr, ss in zip(cfg.snr_db_range, snr_seeds):
            sigma = np.sqrt(power / 10.0 ** (snr / 10.0) / clean.shape[1])
            seeds = ss.spawn(cfg.trials)
            results = list(pool.map(lambda s: _trial(cfg, clean, sigma, s, methods, roots), seeds))
            for m in methods:
                good = [r[m] for r in results if r[m] is not None]
                discarded[(m, snr)] = cfg.trials - len(good)
                est = np.array(good).reshape(-1, len(roots))
                for j, root in enumerate(roots):
                    z = est[:, j]
                    pts = np.stack([z.real, z.imag])
                    cov = np.cov(pts) if len(z) > 1 else np.zeros((2, 2))
                    mean = complex(z.mean()) if len(z) else complex(np.nan, np.nan)
                    stats.append(
                        RootStats(
                            method=m,
                            snr_db=snr,
                            root=float(root),
                            mean=mean,
                            cov=cov,
                            ellipse=_ellipse(cov),
                            abs_error=float(np.mean(np.abs(z - root))) if len(z) else np.nan,
                            max_imag=float(np.max(np.abs(z.imag))) if len(z) else 0.0,
                            samples=z if keep_samples else None,
                        )
                    )
    return NoiseBenchResult(stats=stats, discarded=discarded, config=cfg)


def _fmt(x):
    return repr(float(x))


def write_noise_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NOISE_CSV_HEADER)
        for s in result.stats:
            a, b, th = s.ellipse
            w.writerow(
                [
                    s.method,
                    _fmt(s.snr_db),
                    _fmt(s.root),
                    _fmt(s.mean.real),
                    _fmt(s.mean.imag),
                    _fmt(s.cov[0, 0]),
                    _fmt(s.cov[0, 1]),
                    _fmt(s.cov[1, 1]),
                    _fmt(a),
                    _fmt(b),
                    _fmt(th),
                ]
            )


def _synthetic_image(size, rng):
    side = int(round(np.sqrt(size)))
    if side * side != size:
        return rng.standard_normal(size)
    return rng.standard_normal((side, side))


def timing_sweep(sizes, p=1.5, delta=0.5, steps=50, rank=10, repeats=1, seed=42):
    """Wall-clock seconds of the prior decomposition per pixel count.

    Square sizes give square images, other sizes 1-D signals. The minimum
    over ``repeats`` runs is reported.
    """
    from .operators import OperatorConfig
    from .orthons import orthons

    sizes = [check_count(s, "size", minimum=2) for s in sizes]
    repeats = check_count(repeats, "repeats")
    op = OperatorConfig(p=p)
    rng = np.random.default_rng(seed)
    rows = []
    for size in sizes:
        f = _synthetic_image(size, rng)
        f = f - f.mean()
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                orthons(f, op, delta=delta, steps=steps, rank=rank)
            best = min(best, time.perf_counter() - t0)
        rows.append((size, best))
    return rows


def write_timing_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["size", "seconds"])
        for size, sec in rows:
            w.writerow([int(size), _fmt(sec)])


def loglog_slope(rows):
    """Least-squares slope of ``log(seconds)`` against ``log(size)``."""
    size = np.array([r[0] for r in rows], dtype=float)
    sec = np.array([r[1] for r in rows], dtype=float)
    if len(size) < 2:
        raise InvalidInputError("need at least two sizes for a slope")
    slope, _ = np.polyfit(np.log(size), np.log(sec), 1)
    return float(slope)
