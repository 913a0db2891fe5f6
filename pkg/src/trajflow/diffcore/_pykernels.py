"""Numpy reference kernels.

Same signatures as the compiled ``_ckernels`` module. All arrays are C-contiguous
float64; conv/norm layouts are ``[batch, channels, length]``.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NAME = "numpy"


def conv1d_out_len(length, k, stride, pad):
    return (length + 2 * pad - k) // stride + 1


def _cols(x, k, stride, pad):
    b, cin, length = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    lout = conv1d_out_len(length, k, stride, pad)
    win = sliding_window_view(xp, k, axis=2)[:, :, : stride * (lout - 1) + 1 : stride, :]
    # [B, Lout, Cin, K] -> [B*Lout, Cin*K]
    return win.transpose(0, 2, 1, 3).reshape(b * lout, cin * k), lout


def conv1d_forward(x, w, bias, stride, pad):
    b = x.shape[0]
    cout, cin, k = w.shape
    cols, lout = _cols(x, k, stride, pad)
    out = cols @ w.reshape(cout, cin * k).T
    out += bias
    return np.ascontiguousarray(out.reshape(b, lout, cout).transpose(0, 2, 1))


def conv1d_backward(gout, x, w, stride, pad):
    b, cin, length = x.shape
    cout, _, k = w.shape
    cols, lout = _cols(x, k, stride, pad)
    g = gout.transpose(0, 2, 1).reshape(b * lout, cout)
    gw = (g.T @ cols).reshape(cout, cin, k)
    gb = g.sum(axis=0)
    gcols = (g @ w.reshape(cout, cin * k)).reshape(b, lout, cin, k)
    gxp = np.zeros((b, cin, length + 2 * pad))
    span = stride * (lout - 1) + 1
    for j in range(k):
        gxp[:, :, j : j + span : stride] += gcols[:, :, :, j].transpose(0, 2, 1)
    return np.ascontiguousarray(gxp[:, :, pad : pad + length]), gw, gb


def group_norm_forward(x, gamma, beta, groups, eps):
    b, c, length = x.shape
    xg = x.reshape(b, groups, -1)
    mean = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mean) * rstd).reshape(b, c, length)
    out = xhat * gamma[None, :, None] + beta[None, :, None]
    return out, xhat, rstd.reshape(b, groups)


def group_norm_backward(gout, xhat, rstd, gamma, groups):
    b, c, length = gout.shape
    ggamma = (gout * xhat).sum(axis=(0, 2))
    gbeta = gout.sum(axis=(0, 2))
    gx_hat = (gout * gamma[None, :, None]).reshape(b, groups, -1)
    xh = xhat.reshape(b, groups, -1)
    m1 = gx_hat.mean(axis=2, keepdims=True)
    m2 = (gx_hat * xh).mean(axis=2, keepdims=True)
    gx = rstd[:, :, None] * (gx_hat - m1 - xh * m2)
    return gx.reshape(b, c, length), ggamma, gbeta


def _softplus(x):
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def mish_forward(x):
    return x * np.tanh(_softplus(x))


def mish_backward(gout, x):
    tsp = np.tanh(_softplus(x))
    sig = 0.5 * (1.0 + np.tanh(0.5 * x))
    return gout * (tsp + x * (1.0 - tsp * tsp) * sig)
