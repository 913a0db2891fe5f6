"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy reference in ``_pykernels``. Set ``TRAJFLOW_KERNELS=numpy`` to force
the fallback (the benchmark and the equivalence tests do this per call via
:func:`use_backend`).
"""

import contextlib
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"numpy": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

_requested = os.environ.get("TRAJFLOW_KERNELS", "").strip().lower()
if _requested and _requested not in BACKENDS:
    log.warning("kernel backend %r unavailable, falling back", _requested)
    _requested = ""

active = BACKENDS[_requested] if _requested else (_ckernels or _pykernels)


def available():
    return sorted(BACKENDS)


def set_backend(name):
    global active
    try:
        active = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available()}") from None


@contextlib.contextmanager
def use_backend(name):
    global active
    prev = active
    set_backend(name)
    try:
        yield active
    finally:
        active = prev


def conv1d_out_len(length, k, stride, pad):
    return (length + 2 * pad - k) // stride + 1


def conv1d_forward(x, w, b, stride, pad):
    return active.conv1d_forward(x, w, b, stride, pad)


def conv1d_backward(gout, x, w, stride, pad):
    return active.conv1d_backward(gout, x, w, stride, pad)


def group_norm_forward(x, gamma, beta, groups, eps):
    return active.group_norm_forward(x, gamma, beta, groups, eps)


def group_norm_backward(gout, xhat, rstd, gamma, groups):
    return active.group_norm_backward(gout, xhat, rstd, gamma, groups)


def mish_forward(x):
    return active.mish_forward(x)


def mish_backward(gout, x):
    return active.mish_backward(gout, x)
