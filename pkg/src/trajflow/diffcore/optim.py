"""Adam with bias correction."""

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteError


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_moments(params):
    return {
        "m": {k: np.zeros_like(v) for k, v in params.items()},
        "v": {k: np.zeros_like(v) for k, v in params.items()},
    }


def adam_step(params, grads, moments, hyper, step_index):
    """One update; ``step_index`` counts from 1.

    Returns fresh ``(params, moments)`` dicts; inputs are not mutated.
    """
    if step_index < 1:
        raise ValueError("step_index counts from 1")
    b1, b2 = hyper.beta1, hyper.beta2
    c1 = 1.0 - b1**step_index
    c2 = 1.0 - b2**step_index
    new_p, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape or moments["m"][name].shape != p.shape:
            raise ValueError(f"adam: shape mismatch for {name!r}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")
        m = b1 * moments["m"][name] + (1.0 - b1) * g
        v = b2 * moments["v"][name] + (1.0 - b2) * (g * g)
        denom = np.sqrt(v / c2) + hyper.eps
        # eps == 0 with v == 0 leaves no scale information; take no step there
        upd = np.divide(m / c1, denom, out=np.zeros_like(m), where=denom > 0)
        new_p[name] = p - hyper.lr * upd
        new_m[name] = m
        new_v[name] = v
    return new_p, {"m": new_m, "v": new_v}
