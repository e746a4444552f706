"""Standard and symmetric dynamic mode decomposition.

Both variants share the data pipeline: snapshot pair, truncated SVD of the
first matrix, reduction to ``X = Ur^T X0``, ``Y = Ur^T X1``, then a reduced
``r x r`` map ``F`` fit by least squares. The symmetric variant constrains
``F = F^T`` and solves ``F XX^T + XX^T F = XY^T + YX^T`` instead. The full
``M x M`` linear map is never formed.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from ._validation import check_positive
from .exceptions import InvalidInputError, NonUniformSequenceError

__all__ = [
    "SnapshotMatrixPair",
    "ReducedBasis",
    "DmdResult",
    "build_pair",
    "truncated_svd",
    "dmd",
    "sdmd",
    "solve_symmetric_sylvester",
    "continuous_eigs",
    "reconstruct_discrete",
    "err_dmd",
    "err_rec_discrete",
]

DEFAULT_TOL = 1e-10
SYLVESTER_REG = 1e-12
# a rounded Jordan block has eigenvector condition about 1/sqrt(eps)
DEFECTIVE_COND = 0.1 / np.sqrt(np.finfo(float).eps)


@dataclass
class SnapshotMatrixPair:
    X0: np.ndarray
    X1: np.ndarray


@dataclass
class ReducedBasis:
    Ur: np.ndarray
    Sr: np.ndarray
    Vr: np.ndarray

    @property
    def rank(self):
        return len(self.Sr)


@dataclass
class DmdResult:
    """Spectrum ``mu``, modes (columns), coordinates ``alpha`` and reduced map ``F``.

    ``basis`` holds ``Ur`` so error functionals can be evaluated in the reduced
    space; ``shape`` is the grid shape of one snapshot.
    """

    mu: np.ndarray
    modes: np.ndarray
    alpha: np.ndarray
    F: np.ndarray
    basis: np.ndarray
    dt: float
    shape: tuple
    symmetric: bool = False
    info: dict = field(default_factory=dict)

    @property
    def rank(self):
        return len(self.mu)


def build_pair(seq):
    """``X0 = [psi_0 .. psi_{N-1}]``, ``X1 = [psi_1 .. psi_N]`` as flat columns."""
    if len(seq) < 2:
        raise InvalidInputError("need at least two snapshots")
    if not seq.uniform:
        raise NonUniformSequenceError(
            "DMD needs uniformly sampled snapshots; rescale and resample first"
        )
    cols = seq.flat()
    return SnapshotMatrixPair(cols[:, :-1].copy(), cols[:, 1:].copy())


def truncated_svd(A, rank=None, tol=DEFAULT_TOL):
    """Leading singular triplets of ``A``.

    With ``rank=None`` every triplet with ``s_i / s_1 > tol`` is kept. A fixed
    ``rank`` larger than that numerical rank is shrunk with a warning.
    """
    A = np.asarray(A)
    if A.size == 0 or not np.any(A):
        raise InvalidInputError("cannot decompose an all-zero matrix")
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    numerical = int(np.sum(s / s[0] > tol))
    if rank is None:
        r = numerical
    else:
        r = int(rank)
        if r < 1:
            raise InvalidInputError(f"rank must be >= 1, got {rank}")
        if r > numerical:
            warnings.warn(
                f"requested rank {r} exceeds numerical rank {numerical}; using {numerical}",
                RuntimeWarning,
                stacklevel=2,
            )
            r = numerical
    return ReducedBasis(U[:, :r], s[:r], Vh[:r].conj().T)


def _reduce(seq, rank, tol):
    pair = build_pair(seq)
    basis = truncated_svd(pair.X0, rank, tol)
    X = basis.Ur.T @ pair.X0
    Y = basis.Ur.T @ pair.X1
    return pair, basis, X, Y


def _uniform_dt(seq):
    return float(seq.dts[0]) if len(seq.dts) else 1.0


def _sorted_result(mu, W, basis, F, seq, symmetric, info):
    x0 = basis.Ur.T @ seq.flat()[:, 0]
    alpha = np.linalg.solve(W, x0) if not symmetric else W.T @ x0
    modes = basis.Ur @ W
    order = np.argsort(-np.abs(alpha), kind="stable")
    return DmdResult(
        mu=mu[order],
        modes=modes[:, order],
        alpha=alpha[order],
        F=F,
        basis=basis.Ur,
        dt=_uniform_dt(seq),
        shape=seq.shape,
        symmetric=symmetric,
        info=info,
    )


def dmd(seq, rank=None, tol=DEFAULT_TOL):
    """Standard (projected) DMD of a uniformly sampled sequence.

    ``F = Ur^T X1 Vr Sr^-1``; modes ``phi_i = Ur w_i``. Coordinates solve
    ``W alpha = Ur^T psi_0``, which coincides with ``alpha_i = w_i^* Ur^T psi_0``
    whenever the eigenvectors are orthonormal.
    """
    pair, basis, X, Y = _reduce(seq, rank, tol)
    F = basis.Ur.T @ pair.X1 @ basis.Vr / basis.Sr
    mu, W = np.linalg.eig(F)
    info = {"gram_deviation": None, "defective": False}
    cond_w = np.linalg.cond(W)
    if not np.isfinite(cond_w) or cond_w > DEFECTIVE_COND:
        info["defective"] = True
        warnings.warn("DMD matrix is close to defective", RuntimeWarning, stacklevel=2)
    if np.all(np.abs(mu.imag) == 0):
        mu = mu.real
        W = W.real
    res = _sorted_result(mu, W, basis, F, seq, symmetric=False, info=info)
    gram = res.modes.conj().T @ res.modes
    info["gram_deviation"] = float(np.linalg.norm(gram - np.eye(res.rank)))
    return res


def solve_symmetric_sylvester(G, C, reg=SYLVESTER_REG):
    """Solve ``F G + G F = C`` for symmetric PSD ``G`` and symmetric ``C``.

    With ``G = Q diag(l) Q^T`` the solution is ``(Q^T F Q)_ij = (Q^T C Q)_ij / (l_i + l_j)``.
    Pairs with ``l_i + l_j <= reg * l_max`` carry no data and are set to zero.
    """
    G = np.asarray(G, dtype=float)
    C = np.asarray(C, dtype=float)
    if G.shape != C.shape or G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InvalidInputError("G and C must be square matrices of equal shape")
    G = 0.5 * (G + G.T)
    lam, Q = np.linalg.eigh(G)
    lam = np.clip(lam, 0.0, None)
    lmax = lam.max()
    if lmax <= 0:
        raise InvalidInputError("G is zero: no data to fit")
    denom = lam[:, None] + lam[None, :]
    Ct = Q.T @ C @ Q
    keep = denom > reg * lmax
    Ft = np.zeros_like(Ct)
    Ft[keep] = Ct[keep] / denom[keep]
    F = Q @ Ft @ Q.T
    return 0.5 * (F + F.T)


def sdmd(seq, rank=None, tol=DEFAULT_TOL):
    """Symmetric DMD: least squares ``min ||Y - F X||_F`` over symmetric ``F``.

    The spectrum is real and the modes are orthonormal.
    """
    _, basis, X, Y = _reduce(seq, rank, tol)
    G = X @ X.T
    C = X @ Y.T + Y @ X.T
    F = solve_symmetric_sylvester(G, C)
    mu, W = np.linalg.eigh(F)
    ev = np.linalg.eigvalsh(0.5 * (G + G.T))
    info = {"condition_number": float(ev.max() / ev.min()) if ev.min() > 0 else np.inf}
    return _sorted_result(mu, W, basis, F, seq, symmetric=True, info=info)


def continuous_eigs(result):
    """``ln(mu_i) / dt``; principal complex branch for nonpositive ``mu``."""
    dt = check_positive(result.dt, "dt")
    mu = np.asarray(result.mu)
    if np.any(mu == 0):
        raise InvalidInputError("zero eigenvalue has no logarithm")
    if np.iscomplexobj(mu) or np.any(mu < 0):
        if not np.iscomplexobj(mu):
            warnings.warn(
                "negative eigenvalues map to oscillatory continuous modes",
                RuntimeWarning,
                stacklevel=2,
            )
        return np.log(mu.astype(complex)) / dt
    return np.log(mu) / dt


def _reconstruct_flat(result, k):
    coeffs = result.alpha * np.asarray(result.mu, dtype=complex if np.iscomplexobj(result.mu) else float) ** k
    vec = result.modes @ coeffs
    if np.iscomplexobj(vec):
        vec = vec.real
    return vec


def reconstruct_discrete(result, k):
    """``sum_i alpha_i mu_i^k phi_i`` reshaped to the snapshot grid."""
    return _reconstruct_flat(result, k).reshape(result.shape)


def err_dmd(result, pair):
    """``||Y - F X||_F^2`` in the reduced coordinates of ``result``."""
    X = result.basis.T @ pair.X0
    Y = result.basis.T @ pair.X1
    return float(np.linalg.norm(Y - result.F @ X) ** 2)


def err_rec_discrete(result, seq):
    """``sum_{k=0}^N ||psi~_k - psi_k||^2``."""
    cols = seq.flat()
    return float(
        sum(np.sum((_reconstruct_flat(result, k) - cols[:, k]) ** 2) for k in range(cols.shape[1]))
    )
