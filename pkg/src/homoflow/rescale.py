"""Re-parametrizing the time axis so homogeneous flows decay exponentially.

A step ``psi_{k+1} = psi_k + P(psi_k) dt_k`` is mapped to the rescaled step

    dt~_k = -||P(psi_k)||^2 / <P(psi_k), psi_k> * dt_k

and, since ``P(psi_k) dt_k = psi_{k+1} - psi_k``, the same quantity is
available from the snapshots alone. After rescaling the samples are
interpolated back onto a uniform grid so that DMD can be applied.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_count, inner, sq_norm
from .exceptions import InvalidInputError, NonDissipativeError
from .flow import SnapshotSequence, _apply

__all__ = ["TimeGrid", "rescale_known", "rescale_blind", "resample_uniform"]


@dataclass
class TimeGrid:
    """Strictly increasing rescaled times starting at zero.

    ``truncated`` marks grids cut short at a steady state; the grid then
    covers only the first ``len(times)`` snapshots of its sequence.
    """

    times: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0 or self.times[0] != 0.0:
            raise InvalidInputError("time grid must be 1-D and start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidInputError("time grid must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def steps(self):
        return np.diff(self.times)


def _grid(steps, truncated):
    return TimeGrid(np.concatenate([[0.0], np.cumsum(steps)]), truncated=truncated)


def rescale_known(seq, op):
    """Rescaled grid from the operator and the recorded step sizes."""
    steps = []
    truncated = False
    for k in range(seq.n_steps):
        psi = seq.snapshots[k]
        p_psi = _apply(op, psi)
        num = sq_norm(p_psi)
        den = inner(p_psi, psi)
        if num == 0.0 or den >= 0.0:
            truncated = True
            break
        steps.append(-num / den * seq.dts[k])
    return _grid(steps, truncated)


def rescale_blind(seq, on_nondissipative="error"):
    """Rescaled grid from snapshot differences only.

    ``on_nondissipative`` selects what happens when a step has
    ``<psi_{k+1} - psi_k, psi_k> >= 0``: ``"error"`` raises
    :class:`NonDissipativeError`, ``"clamp"`` repeats the previous step.
    A vanishing difference marks the steady state and truncates the grid.
    """
    if on_nondissipative not in ("error", "clamp"):
        raise InvalidInputError(f"unknown policy {on_nondissipative!r}")
    snaps = seq.snapshots
    steps = []
    truncated = False
    for k in range(len(snaps) - 1):
        diff = snaps[k + 1] - snaps[k]
        num = sq_norm(diff)
        if num == 0.0:
            truncated = True
            break
        den = inner(diff, snaps[k])
        if den >= 0.0:
            if on_nondissipative == "clamp" and steps:
                steps.append(steps[-1])
                continue
            raise NonDissipativeError(k)
        steps.append(-num / den)
    return _grid(steps, truncated)


def resample_uniform(seq, grid, samples=None):
    """Linear interpolation of the snapshots at ``j * t~_N / (samples - 1)``.

    ``samples`` defaults to the number of grid points. Endpoints are
    reproduced exactly. The output sequence is uniform in rescaled time and
    carries the interpolated original times in ``meta["source_times"]``.
    """
    n = len(grid)
    if n < 2:
        raise InvalidInputError("need at least two grid points to resample")
    if n > len(seq):
        raise InvalidInputError("grid is longer than the sequence")
    samples = n if samples is None else check_count(samples, "samples", minimum=2)
    t = grid.times
    span = t[-1]
    targets = np.arange(samples) * (span / (samples - 1))
    targets[-1] = span
    idx = np.clip(np.searchsorted(t, targets, side="right") - 1, 0, n - 2)
    w = (targets - t[idx]) / (t[idx + 1] - t[idx])
    snaps = seq.snapshots[:n]
    shape = (-1,) + (1,) * (snaps.ndim - 1)
    out = (1.0 - w).reshape(shape) * snaps[idx] + w.reshape(shape) * snaps[idx + 1]
    exact = w == 0.0
    out[exact] = snaps[idx[exact]]
    out[-1] = snaps[n - 1]
    res = SnapshotSequence(out, np.full(samples - 1, span / (samples - 1)))
    source = seq.times[:n]
    res.meta["source_times"] = np.interp(targets, t, source)
    res.meta["rescaled_times"] = targets
    return res
