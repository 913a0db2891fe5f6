"""Per-dimension min/max scaling into [-1, 1]."""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, UsageError


@dataclass(frozen=True)
class NormStats:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def degenerate(self):
        """Mask of dimensions whose fitted range is zero."""
        return self.hi == self.lo

    def to_dict(self):
        return {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["lo"], dtype=np.float64), np.asarray(d["hi"], dtype=np.float64))

    def __eq__(self, other):
        return (
            isinstance(other, NormStats)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )


def fit_stats(traj):
    """Fit on ``[..., D]`` data (usually the training split)."""
    x = np.asarray(traj, dtype=np.float64)
    if x.size == 0:
        raise UsageError("cannot fit normalisation stats on empty data")
    flat = x.reshape(-1, x.shape[-1])
    stats = NormStats(flat.min(axis=0), flat.max(axis=0))
    if stats.degenerate.any():
        warnings.warn(
            f"zero-range dimensions {np.flatnonzero(stats.degenerate).tolist()} normalise to 0",
            RuntimeWarning,
            stacklevel=2,
        )
    return stats


def _check(x, stats):
    if x.shape[-1] != stats.dim:
        raise ShapeError(f"data has {x.shape[-1]} dims, stats have {stats.dim}")


def normalize(traj, stats):
    x = np.asarray(traj, dtype=np.float64)
    _check(x, stats)
    span = stats.hi - stats.lo
    flat = stats.degenerate
    safe = np.where(flat, 1.0, span)
    out = 2.0 * (x - stats.lo) / safe - 1.0
    return np.where(flat, 0.0, out)


def denormalize(traj, stats):
    """Inverse of :func:`normalize`; collapsed dims come back as their constant."""
    x = np.asarray(traj, dtype=np.float64)
    _check(x, stats)
    span = stats.hi - stats.lo
    return np.where(stats.degenerate, stats.lo, (x + 1.0) * 0.5 * span + stats.lo)
