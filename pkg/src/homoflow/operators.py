"""Discrete p-homogeneous energies and their negative gradients.

The p-Laplacian uses forward-difference gradients with Neumann ghost cells
(the last forward difference along each axis is zero) and the matching
backward-difference divergence, so ``div = -grad^T`` holds exactly. With
that pairing the operator is the negative gradient of the discrete
p-Dirichlet energy:

    d/ds R(psi + s v) |_{s=0} = h**d * <-P(psi), v>

where ``<., .>`` is the unweighted sum over grid values and ``h**d`` is the
cell volume carried by the energy.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import (
    check_homogeneity,
    check_positive,
    check_signal,
    inner,
    sq_norm,
)
from .exceptions import InvalidInputError, SteadyStateError

__all__ = [
    "OperatorConfig",
    "NormPowerOperator",
    "forward_gradient",
    "backward_divergence",
    "p_dirichlet_energy",
    "p_laplacian",
    "rayleigh_step_factor",
]


@dataclass(frozen=True)
class OperatorConfig:
    """p-Laplacian on a uniform grid with Neumann boundaries.

    Parameters
    ----------
    p : float
        Homogeneity of the energy, ``1 <= p <= 2``. The linear case ``p = 2``
        is accepted here for reference computations; decompositions need ``p < 2``.
    eps : float
        Gradient-magnitude regularization; ``|grad psi|_eps = sqrt(|grad psi|^2 + eps^2)``.
    h : float
        Grid spacing.
    """

    p: float = 1.5
    eps: float = 1e-8
    h: float = 1.0

    def __post_init__(self):
        check_homogeneity(self.p, upper_inclusive=True)
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise InvalidInputError(f"eps must be >= 0, got {self.eps}")
        check_positive(self.h, "h")

    def apply(self, psi):
        return p_laplacian(psi, self)

    __call__ = apply

    def energy(self, psi):
        return p_dirichlet_energy(psi, self)


@dataclass(frozen=True)
class NormPowerOperator:
    """Separable (p-1)-homogeneous operator with a prescribed eigenpair.

    ``P(psi) = lam * (||psi|| / ref_norm)**(p - 2) * psi``, the negative
    gradient of ``R(psi) = -lam * ref_norm**(2-p) * ||psi||**p / p``. Every
    signal of norm ``ref_norm`` is a nonlinear eigenfunction with eigenvalue
    ``lam``, so flows driven by this operator are exactly separable. It is the
    stand-in for numerically generated p-Laplacian eigenfunctions.
    """

    p: float
    lam: float
    ref_norm: float = 1.0

    def __post_init__(self):
        check_homogeneity(self.p)
        if not (np.isfinite(self.lam) and self.lam <= 0):
            raise InvalidInputError(f"lam must be a finite nonpositive number, got {self.lam}")
        check_positive(self.ref_norm, "ref_norm")

    @classmethod
    def for_signal(cls, f, p, lam):
        """Operator for which ``f`` satisfies ``P(f) = lam * f``."""
        return cls(p=p, lam=lam, ref_norm=float(np.linalg.norm(np.ravel(f))))

    def apply(self, psi):
        psi = check_signal(psi)
        nrm = np.linalg.norm(psi.ravel())
        if nrm == 0.0:
            return np.zeros_like(psi)
        return self.lam * (nrm / self.ref_norm) ** (self.p - 2.0) * psi

    __call__ = apply

    def energy(self, psi):
        nrm = np.linalg.norm(np.ravel(psi))
        return -self.lam * self.ref_norm ** (2.0 - self.p) * nrm**self.p / self.p


def forward_gradient(psi, h=1.0):
    """Forward differences along every axis, zero on the last slice (Neumann).

    Returns an array of shape ``(psi.ndim, *psi.shape)``.
    """
    psi = np.asarray(psi, dtype=float)
    grad = np.zeros((psi.ndim,) + psi.shape)
    for ax in range(psi.ndim):
        lead = [slice(None)] * psi.ndim
        lead[ax] = slice(0, -1)
        grad[(ax, *lead)] = np.diff(psi, axis=ax) / h
    return grad


def backward_divergence(field, h=1.0):
    """Negative adjoint of :func:`forward_gradient`."""
    field = np.asarray(field, dtype=float)
    ndim = field.shape[0]
    div = np.zeros(field.shape[1:])
    for ax in range(ndim):
        comp = field[ax].copy()
        # the last slice lies outside the range of the gradient (Neumann); drop it
        last = [slice(None)] * ndim
        last[ax] = -1
        comp[tuple(last)] = 0.0
        pad = [(0, 0)] * ndim
        pad[ax] = (1, 0)
        shifted = np.pad(comp, pad)
        keep = [slice(None)] * ndim
        keep[ax] = slice(0, -1)
        div += (comp - shifted[tuple(keep)]) / h
    return div


def _flux_weight(grad, p, eps):
    mag2 = np.sum(grad**2, axis=0)
    if p == 2.0:
        return np.ones_like(mag2)
    reg = mag2 + eps * eps
    with np.errstate(divide="ignore"):
        weight = np.where(reg > 0, reg ** ((p - 2.0) / 2.0), 0.0)
    # zero-gradient cells carry zero flux regardless of the weight
    return np.where(mag2 > 0, weight, 0.0)


def p_dirichlet_energy(psi, cfg):
    """``(1/p) * sum_cells (|grad psi|_eps^p - eps^p) * h^d``."""
    psi = check_signal(psi)
    grad = forward_gradient(psi, cfg.h)
    mag2 = np.sum(grad**2, axis=0)
    dens = (mag2 + cfg.eps**2) ** (cfg.p / 2.0) - cfg.eps**cfg.p
    return float(np.sum(dens) * cfg.h**psi.ndim / cfg.p)


def p_laplacian(psi, cfg):
    """``div(|grad psi|_eps^(p-2) grad psi)`` with Neumann boundaries."""
    psi = check_signal(psi)
    grad = forward_gradient(psi, cfg.h)
    weight = _flux_weight(grad, cfg.p, cfg.eps)
    return backward_divergence(weight * grad, cfg.h)


def rayleigh_step_factor(p_psi, psi):
    """Inverse generalized Rayleigh quotient ``-<P(psi), psi> / ||P(psi)||^2``.

    Raises
    ------
    SteadyStateError
        If ``P(psi)`` vanishes, i.e. the flow has reached its steady state.
    """
    denom = sq_norm(p_psi)
    if denom == 0.0:
        raise SteadyStateError("P(psi) = 0: the flow is at steady state")
    return -inner(p_psi, psi) / denom
