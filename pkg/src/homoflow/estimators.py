"""scikit-learn style wrappers around the DMD and OrthoNS pipelines.

``DMD`` follows the usual layout: rows of ``X`` are snapshots ordered in
time, columns are features. ``OrthoNS`` is fit on a single signal or image,
which it evolves itself; ``PosteriorOrthoNS`` is fit on recorded snapshots.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dmd import DEFAULT_TOL, continuous_eigs, dmd, sdmd
from .exceptions import InvalidInputError
from .flow import SnapshotSequence
from .operators import OperatorConfig
from .orthons import (
    band_filter,
    filter_modes,
    orthons,
    orthons_posterior,
    reconstruct_flow,
    spectrum,
)

__all__ = ["DMD", "OrthoNS", "PosteriorOrthoNS"]


class DMD(TransformerMixin, BaseEstimator):
    """Dynamic mode decomposition of uniformly sampled snapshots.

    Parameters
    ----------
    rank : int or None
        Truncation rank; ``None`` keeps singular values above ``tol``.
    tol : float
        Relative singular-value threshold.
    symmetric : bool
        Fit a symmetric map (real spectrum, orthonormal modes).
    dt : float
        Sampling interval, used by :attr:`continuous_eigs_`.

    Attributes
    ----------
    eigs_ : ndarray of shape (r,)
    modes_ : ndarray of shape (n_features, r)
    amplitudes_ : ndarray of shape (r,)
    """

    def __init__(self, rank=None, tol=DEFAULT_TOL, symmetric=False, dt=1.0):
        self.rank = rank
        self.tol = tol
        self.symmetric = symmetric
        self.dt = dt

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        seq = SnapshotSequence(X, np.full(len(X) - 1, float(self.dt)))
        fn = sdmd if self.symmetric else dmd
        self.result_ = fn(seq, rank=self.rank, tol=self.tol)
        self.eigs_ = self.result_.mu
        self.modes_ = self.result_.modes
        self.amplitudes_ = self.result_.alpha
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def continuous_eigs_(self):
        check_is_fitted(self, "result_")
        return continuous_eigs(self.result_)

    def transform(self, X):
        """Mode coordinates of each row (least squares for non-orthogonal modes)."""
        check_is_fitted(self, "result_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise InvalidInputError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        if self.symmetric:
            return X @ self.modes_
        coef, *_ = np.linalg.lstsq(self.modes_, X.T, rcond=None)
        return coef.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "result_")
        out = np.asarray(Z) @ self.modes_.T
        return out.real if np.iscomplexobj(out) else out

    def predict(self, steps):
        """Snapshots ``sum_i alpha_i mu_i^k phi_i`` at the given step indices."""
        check_is_fitted(self, "result_")
        k = np.atleast_1d(np.asarray(steps, dtype=float))
        coeffs = self.amplitudes_[None, :] * np.power.outer(
            np.asarray(self.eigs_, dtype=complex), k
        ).T
        return self.inverse_transform(coeffs)


class _OrthoNsMixin:
    """Shared accessors once ``decomposition_`` exists."""

    def _set_fitted(self, dec):
        self.decomposition_ = dec
        self.modes_ = dec.modes
        self.lambdas_ = dec.lambdas
        self.alphas_ = dec.alphas
        self.ext_times_ = dec.ext_times
        self.mus_ = dec.mus
        self.n_components_ = dec.rank
        return self

    @property
    def spectrum_(self):
        check_is_fitted(self, "decomposition_")
        return spectrum(self.decomposition_)

    def transform(self, X):
        """Coordinates ``<phi_i, X>`` in the orthonormal mode basis."""
        check_is_fitted(self, "decomposition_")
        X = np.asarray(X, dtype=float)
        if X.shape != self.decomposition_.shape:
            raise InvalidInputError(
                f"expected shape {self.decomposition_.shape}, got {X.shape}"
            )
        return self.modes_.T @ X.ravel()

    def inverse_transform(self, coeffs):
        check_is_fitted(self, "decomposition_")
        return (self.modes_ @ np.asarray(coeffs, dtype=float)).reshape(self.decomposition_.shape)

    def predict(self, t):
        """Flow synthesized from the modes at time ``t`` (scalar or array)."""
        check_is_fitted(self, "decomposition_")
        ts = np.atleast_1d(t)
        out = np.stack([reconstruct_flow(self.decomposition_, float(s)) for s in ts])
        return out[0] if np.ndim(t) == 0 else out

    def filter(self, h=None, t_min=0.0, t_max=np.inf):
        """Apply per-mode gains ``h``, or keep the band ``t_min <= T <= t_max``."""
        check_is_fitted(self, "decomposition_")
        if h is None:
            h = band_filter(self.decomposition_, t_min, t_max)
        return filter_modes(self.decomposition_, h)


class OrthoNS(_OrthoNsMixin, TransformerMixin, BaseEstimator):
    """Orthogonal nonlinear spectral decomposition under the p-Laplacian flow.

    ``fit`` takes one signal (1-D) or image (2-D), evolves it with the
    adaptive explicit scheme and decomposes the snapshots.
    """

    def __init__(
        self,
        p=1.5,
        eps=1e-8,
        spacing=1.0,
        delta=0.5,
        n_steps=200,
        rank=None,
        tol=DEFAULT_TOL,
        eigenvalue="auto",
    ):
        self.p = p
        self.eps = eps
        self.spacing = spacing
        self.delta = delta
        self.n_steps = n_steps
        self.rank = rank
        self.tol = tol
        self.eigenvalue = eigenvalue

    def fit(self, X, y=None):
        op = OperatorConfig(p=self.p, eps=self.eps, h=self.spacing)
        dec = orthons(
            X,
            op,
            delta=self.delta,
            steps=self.n_steps,
            rank=self.rank,
            tol=self.tol,
            eigenvalue=self.eigenvalue,
        )
        return self._set_fitted(dec)


class PosteriorOrthoNS(_OrthoNsMixin, TransformerMixin, BaseEstimator):
    """Decomposition of snapshots recorded with arbitrary step sizes.

    With ``operator=None`` the time grid is recovered from the snapshots alone.
    """

    def __init__(
        self,
        p=1.5,
        operator=None,
        rank=None,
        tol=DEFAULT_TOL,
        samples=None,
        eigenvalue="auto",
        on_nondissipative="error",
    ):
        self.p = p
        self.operator = operator
        self.rank = rank
        self.tol = tol
        self.samples = samples
        self.eigenvalue = eigenvalue
        self.on_nondissipative = on_nondissipative

    def fit(self, X, y=None, dts=None):
        """``X`` stacks snapshots along axis 0; ``dts`` defaults to unit steps."""
        if isinstance(X, SnapshotSequence):
            seq = X
        else:
            X = np.asarray(X, dtype=float)
            dts = np.ones(len(X) - 1) if dts is None else dts
            seq = SnapshotSequence(X, dts)
        dec = orthons_posterior(
            seq,
            self.p,
            op=self.operator,
            rank=self.rank,
            tol=self.tol,
            samples=self.samples,
            eigenvalue=self.eigenvalue,
            on_nondissipative=self.on_nondissipative,
        )
        return self._set_fitted(dec)
