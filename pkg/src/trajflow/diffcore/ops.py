"""Differentiable primitives.

Every primitive has a forward rule ``f(*arrays, **attrs) -> (out, saved)`` and
a backward rule ``b(gout, inputs, out, saved, **attrs) -> grads per input``.
The public wrappers below accept ndarrays or :class:`Var` handles; with no
``Var`` among the operands nothing is recorded.

Broadcasting is limited to scalar-with-array (``add_scalar``/``mul_scalar``);
the channel-wise broadcasts needed by the network live inside ``dense``,
``conv1d``, ``group_norm`` and ``film`` where their gradient rules are explicit.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ShapeError
from . import kernels
from .tape import Var


@dataclass(frozen=True)
class Primitive:
    name: str
    forward: Callable
    backward: Callable


PRIMITIVES = {}


def _register(name, fwd, bwd):
    PRIMITIVES[name] = Primitive(name, fwd, bwd)


def _apply(op, *args, **attrs):
    for a in args:
        if isinstance(a, Var):
            return a.tape.record(op, args, attrs)
    out, _ = PRIMITIVES[op].forward(*(np.asarray(a, dtype=np.float64) for a in args), **attrs)
    return out


def _shape(x):
    return x.shape if isinstance(x, Var) else np.shape(x)


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# -- elementwise --------------------------------------------------------------


def _add_f(a, b):
    _same_shape("add", a, b)
    return a + b, None


def _sub_f(a, b):
    _same_shape("sub", a, b)
    return a - b, None


def _mul_f(a, b):
    _same_shape("mul", a, b)
    return a * b, None


_register("add", _add_f, lambda g, ins, out, s: (g, g))
_register("sub", _sub_f, lambda g, ins, out, s: (g, -g))
_register("mul", _mul_f, lambda g, ins, out, s: (g * ins[1], g * ins[0]))
_register("neg", lambda a: (-a, None), lambda g, ins, out, s: (-g,))
_register("add_scalar", lambda a, c: (a + c, None), lambda g, ins, out, s, c: (g,))
_register("mul_scalar", lambda a, c: (a * c, None), lambda g, ins, out, s, c: (g * c,))


def _is_scalar(x):
    return np.ndim(x) == 0 and not isinstance(x, Var)


def add(a, b):
    if _is_scalar(b):
        return _apply("add_scalar", a, c=float(b))
    if _is_scalar(a):
        return _apply("add_scalar", b, c=float(a))
    return _apply("add", a, b)


def sub(a, b):
    if _is_scalar(b):
        return _apply("add_scalar", a, c=-float(b))
    return _apply("sub", a, b)


def mul(a, b):
    if _is_scalar(b):
        return _apply("mul_scalar", a, c=float(b))
    if _is_scalar(a):
        return _apply("mul_scalar", b, c=float(a))
    return _apply("mul", a, b)


def neg(a):
    return _apply("neg", a)


# -- reductions ---------------------------------------------------------------

_register(
    "sum",
    lambda a: (np.asarray(a.sum()), None),
    lambda g, ins, out, s: (np.full(ins[0].shape, float(g)),),
)


def _mse_f(a, b):
    _same_shape("mean_square_error", a, b)
    d = a - b
    return np.asarray(np.mean(d * d)), d


def _mse_b(g, ins, out, d):
    ga = (2.0 * float(g) / d.size) * d
    return ga, -ga


_register("mse", _mse_f, _mse_b)


def sum_all(a):
    return _apply("sum", a)


def mean_square_error(a, b):
    """``mean((a - b)**2)`` over every element."""
    return _apply("mse", a, b)


# -- shape ops ----------------------------------------------------------------


def _reshape_f(a, shape):
    if int(np.prod(shape)) != a.size:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}")
    return a.reshape(shape), None


_register("reshape", _reshape_f, lambda g, ins, out, s, shape: (g.reshape(ins[0].shape),))


def _swap12_f(a):
    if a.ndim != 3:
        raise ShapeError(f"swap12: expected 3-d input, got {a.shape}")
    return np.ascontiguousarray(a.transpose(0, 2, 1)), None


_register("swap12", _swap12_f, lambda g, ins, out, s: (np.ascontiguousarray(g.transpose(0, 2, 1)),))


def _concat_f(a, b, axis):
    if a.ndim != b.ndim or any(
        da != db for i, (da, db) in enumerate(zip(a.shape, b.shape)) if i != axis
    ):
        raise ShapeError(f"concat: shapes {a.shape} and {b.shape} differ off axis {axis}")
    return np.concatenate([a, b], axis=axis), None


def _concat_b(g, ins, out, s, axis):
    n = ins[0].shape[axis]
    ga, gb = np.split(g, [n], axis=axis)
    return np.ascontiguousarray(ga), np.ascontiguousarray(gb)


_register("concat", _concat_f, _concat_b)


def _up2_f(a):
    if a.ndim != 3:
        raise ShapeError(f"upsample2: expected [B, C, L], got {a.shape}")
    return np.repeat(a, 2, axis=2), None


def _up2_b(g, ins, out, s):
    b, c, length = ins[0].shape
    return (g.reshape(b, c, length, 2).sum(axis=3),)


_register("upsample2", _up2_f, _up2_b)


def reshape(a, shape):
    return _apply("reshape", a, shape=tuple(int(d) for d in shape))


def swap12(a):
    """Swap axes 1 and 2 of a 3-d array."""
    return _apply("swap12", a)


def concat(a, b, axis=1):
    return _apply("concat", a, b, axis=axis)


def upsample2(a):
    """Nearest-neighbour x2 upsampling along the last axis."""
    return _apply("upsample2", a)


# -- layers -------------------------------------------------------------------


def _dense_f(x, w, b):
    if x.ndim != 2 or w.ndim != 2 or b.ndim != 1 or x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeError(f"dense: x{x.shape} @ w{w.shape} + b{b.shape} is not defined")
    return x @ w + b, None


def _dense_b(g, ins, out, s):
    x, w, _ = ins
    return g @ w.T, x.T @ g, g.sum(axis=0)


_register("dense", _dense_f, _dense_b)


def dense(x, w, b):
    """Affine map ``x @ w + b`` for ``x`` of shape [B, in]."""
    return _apply("dense", x, w, b)


def _conv_f(x, w, b, stride, pad):
    if x.ndim != 3 or w.ndim != 3 or b.ndim != 1:
        raise ShapeError(f"conv1d: expected x[B,C,L], w[O,C,K], b[O]; got {x.shape}, {w.shape}, {b.shape}")
    if x.shape[1] != w.shape[1] or w.shape[0] != b.shape[0]:
        raise ShapeError(f"conv1d: channel mismatch x{x.shape} w{w.shape} b{b.shape}")
    if kernels.conv1d_out_len(x.shape[2], w.shape[2], stride, pad) < 1:
        raise ShapeError(f"conv1d: input length {x.shape[2]} too short for kernel {w.shape[2]}")
    x = np.ascontiguousarray(x)
    w = np.ascontiguousarray(w)
    return kernels.conv1d_forward(x, w, np.ascontiguousarray(b), stride, pad), None


def _conv_b(g, ins, out, s, stride, pad):
    x, w, _ = ins
    return kernels.conv1d_backward(
        np.ascontiguousarray(g), np.ascontiguousarray(x), np.ascontiguousarray(w), stride, pad
    )


_register("conv1d", _conv_f, _conv_b)


def conv1d(x, w, b, stride=1, pad=None):
    """1-d cross-correlation over [B, C, L]; ``pad=None`` means same padding."""
    k = _shape(w)[-1]
    if pad is None:
        pad = (k - 1) // 2
    return _apply("conv1d", x, w, b, stride=int(stride), pad=int(pad))


def _gn_f(x, gamma, beta, groups, eps):
    if x.ndim != 3 or x.shape[1] % groups or gamma.shape != (x.shape[1],) or beta.shape != gamma.shape:
        raise ShapeError(
            f"group_norm: x{x.shape} with {groups} groups, gamma{gamma.shape}, beta{beta.shape}"
        )
    out, xhat, rstd = kernels.group_norm_forward(
        np.ascontiguousarray(x), np.ascontiguousarray(gamma), np.ascontiguousarray(beta), groups, eps
    )
    return out, (xhat, rstd)


def _gn_b(g, ins, out, saved, groups, eps):
    xhat, rstd = saved
    return kernels.group_norm_backward(np.ascontiguousarray(g), xhat, rstd, np.ascontiguousarray(ins[1]), groups)


_register("group_norm", _gn_f, _gn_b)


def group_norm(x, gamma, beta, groups, eps=1e-5):
    return _apply("group_norm", x, gamma, beta, groups=int(groups), eps=float(eps))


_register(
    "mish",
    lambda x: (kernels.mish_forward(x), None),
    lambda g, ins, out, s: (kernels.mish_backward(g, ins[0]),),
)


def mish(x):
    """``x * tanh(softplus(x))``."""
    return _apply("mish", x)


def _film_f(h, scale, shift):
    if h.ndim not in (2, 3) or not (scale.shape == shift.shape == h.shape[:-1]):
        raise ShapeError(f"film: features {h.shape} vs scale {scale.shape}, shift {shift.shape}")
    return h * (1.0 + scale[..., None]) + shift[..., None], None


def _film_b(g, ins, out, s):
    h, scale, _ = ins
    return g * (1.0 + scale[..., None]), (g * h).sum(axis=-1), g.sum(axis=-1)


_register("film", _film_f, _film_b)


def film(features, scale, shift):
    """Channel-wise ``features * (1 + scale) + shift``.

    ``features`` is [C, L] with [C] modulations, or [B, C, L] with [B, C].
    """
    return _apply("film", features, scale, shift)
