"""Closed-form DMD results for separable flows ``psi_k = a_k f``."""

from collections import namedtuple
import math

import numpy as np
from scipy.integrate import trapezoid

from ._validation import check_count, check_homogeneity, check_positive
from .exceptions import InvalidInputError
from .flow import FlowParams, decay_profile, extinction_time

__all__ = [
    "Rank1Dmd",
    "analytic_dmd_rank1",
    "limit_mu_tilde",
    "paradox_bound",
    "err_rec_continuous",
    "ParadoxRow",
    "paradox_table",
]

Rank1Dmd = namedtuple("Rank1Dmd", "mu phi_scale alpha err_dmd")


def analytic_dmd_rank1(a, f_norm):
    """Rank-one DMD of ``psi_k = a_k f`` without touching the snapshots.

    ``mu = <a_1^N, a_0^{N-1}> / ||a_0^{N-1}||^2``, mode ``f / ||f||``,
    ``alpha = ||f||``. ``err_dmd`` is ``||f||^2 (||a_1^N||^2 - <a_1^N, a_0^{N-1}>^2 / ||a_0^{N-1}||^2)``,
    the Frobenius residual of the reduced data.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or len(a) < 2:
        raise InvalidInputError("decay vector needs at least two entries")
    if a[0] != 1.0:
        raise InvalidInputError("decay vector must start at a_0 = 1")
    f_norm = check_positive(f_norm, "f_norm")
    head, tail = a[:-1], a[1:]
    cross = float(tail @ head)
    energy = float(head @ head)
    mu = cross / energy
    err = f_norm**2 * max(float(tail @ tail) - cross**2 / energy, 0.0)
    return Rank1Dmd(mu=mu, phi_scale=1.0 / f_norm, alpha=f_norm, err_dmd=err)


def limit_mu_tilde(lam, p):
    """Continuous DMD eigenvalue ``lam (4 - p) / 2`` in the limit ``dt -> 0``.

    ``p = 2`` is accepted and gives back ``lam``.
    """
    p = check_homogeneity(p, upper_inclusive=True)
    return lam * (4.0 - p) / 2.0


def paradox_bound(f_norm_sq, lam, p):
    """Lower bound ``B > 0`` on the continuous reconstruction error of exponential DMD."""
    check_positive(f_norm_sq, "f_norm_sq")
    p = check_homogeneity(p)
    if not lam < 0:
        raise InvalidInputError("paradox bound needs lam < 0")
    gap = 1.0 - math.sqrt(-math.expm1(-(4.0 - p) / (2.0 - p)))
    return -f_norm_sq / (lam * (4.0 - p)) * gap**2


def err_rec_continuous(params, mu_tilde, quadrature_nodes=100_000):
    """Trapezoid rule for ``||f||^2 int_0^T (a(t) - exp(mu_tilde t))^2 dt``."""
    nodes = check_count(quadrature_nodes, "quadrature_nodes", minimum=1000)
    T = extinction_time(params)
    if not math.isfinite(T):
        raise InvalidInputError("continuous error needs a finite extinction time")
    t = np.linspace(0.0, T, nodes)
    integrand = (decay_profile(t, params) - np.exp(np.real(mu_tilde) * t)) ** 2
    return float(params.f_norm_sq * trapezoid(integrand, t))


ParadoxRow = namedtuple("ParadoxRow", "dt err_dmd err_rec_c bound mu_tilde")


def paradox_table(lam, p, levels=8, f_norm_sq=1.0, base=50, quadrature_nodes=100_000):
    """Rank-one DMD of the decay profile at ``dt = T / (base * 2^i)``, ``i < levels``.

    Each row holds the fitting error, the continuous reconstruction error of
    the exponential model, the lower bound and the continuous eigenvalue.
    """
    params = FlowParams(lam=lam, p=p, f_norm_sq=f_norm_sq)
    levels = check_count(levels, "levels")
    base = check_count(base, "base", minimum=2)
    T = extinction_time(params)
    bound = paradox_bound(f_norm_sq, lam, p)
    f_norm = math.sqrt(f_norm_sq)
    rows = []
    for i in range(levels):
        n = base * 2**i
        dt = T / n
        a = decay_profile(np.arange(n + 1) * dt, params)
        res = analytic_dmd_rank1(a, f_norm)
        mu_tilde = math.log(res.mu) / dt
        err_c = err_rec_continuous(params, mu_tilde, quadrature_nodes)
        rows.append(ParadoxRow(dt, res.err_dmd, err_c, bound, mu_tilde))
    return rows
