"""Central finite-difference gradient checking."""

import numpy as np

from .tape import backward, record_forward


def numeric_grad(fn, leaves, name, h=1e-5, coords=None):
    """Central differences of scalar ``fn(**leaves)`` w.r.t. ``leaves[name]``.

    ``coords`` restricts the probe to a subset of flat indices; the rest of
    the returned array is NaN.
    """
    base = leaves[name]
    out = np.full(base.size, np.nan)
    idx = range(base.size) if coords is None else coords
    for i in idx:
        plus = base.copy().reshape(-1)
        minus = base.copy().reshape(-1)
        plus[i] += h
        minus[i] -= h
        fp = float(fn(**{**leaves, name: plus.reshape(base.shape)}))
        fm = float(fn(**{**leaves, name: minus.reshape(base.shape)}))
        out[i] = (fp - fm) / (2 * h)
    return out.reshape(base.shape)


def relative_error(analytic, numeric):
    """Max abs difference scaled by the larger gradient magnitude.

    NaN entries of ``numeric`` (unprobed coordinates) are ignored.
    """
    a = np.asarray(analytic).reshape(-1)
    n = np.asarray(numeric).reshape(-1)
    mask = ~np.isnan(n)
    a, n = a[mask], n[mask]
    if a.size == 0:
        return 0.0
    scale = max(np.abs(a).max(), np.abs(n).max(), 1e-8)
    return float(np.abs(a - n).max() / scale)


def check_gradients(fn, leaves, h=1e-5, max_coords=None, rng=None):
    """Compare reverse-mode and central-difference gradients of scalar ``fn``.

    Returns ``{leaf_name: relative_error}``. With ``max_coords`` set, each leaf
    is probed at that many random flat indices drawn from ``rng``.
    """
    _, tape = record_forward(fn, leaves)
    analytic = backward(tape)
    errs = {}
    for name, val in leaves.items():
        coords = None
        if max_coords is not None and val.size > max_coords:
            coords = rng.choice(val.size, size=max_coords, replace=False)
        num = numeric_grad(fn, leaves, name, h=h, coords=coords)
        errs[name] = relative_error(analytic[name], num)
    return errs
