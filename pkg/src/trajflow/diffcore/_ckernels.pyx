# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the conv U-Net hot path.

Mirrors ``_pykernels`` exactly in signature. im2col/col2im and the norm and
activation passes are fused loops; the matrix products go straight to BLAS.
"""

import numpy as np

from libc.math cimport exp, sqrt
from scipy.linalg.cython_blas cimport dgemm

NAME = "cython"


def conv1d_out_len(Py_ssize_t length, Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad):
    return (length + 2 * pad - k) // stride + 1


cdef inline void _im2col(const double* x, double* cols, int cin, int length,
                         int k, int stride, int pad, int lout) noexcept nogil:
    # cols row-major [cin*k, lout]
    cdef int c, j, o, i
    cdef double* row
    for c in range(cin):
        for j in range(k):
            row = cols + (c * k + j) * lout
            for o in range(lout):
                i = o * stride - pad + j
                if 0 <= i < length:
                    row[o] = x[c * length + i]
                else:
                    row[o] = 0.0


def conv1d_forward(double[:, :, ::1] x, double[:, :, ::1] w, double[::1] bias,
                   int stride, int pad):
    cdef int b = x.shape[0], cin = x.shape[1], length = x.shape[2]
    cdef int cout = w.shape[0], k = w.shape[2]
    cdef int lout = (length + 2 * pad - k) // stride + 1
    cdef int ck = cin * k
    out_arr = np.empty((b, cout, lout))
    cols_arr = np.empty((ck, lout))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] cols = cols_arr
    cdef double one = 1.0
    cdef int bi, co, o
    with nogil:
        for bi in range(b):
            _im2col(&x[bi, 0, 0], &cols[0, 0], cin, length, k, stride, pad, lout)
            for co in range(cout):
                for o in range(lout):
                    out[bi, co, o] = bias[co]
            # row-major out[cout, lout] += w[cout, ck] @ cols[ck, lout]
            dgemm("N", "N", &lout, &cout, &ck, &one, &cols[0, 0], &lout,
                  &w[0, 0, 0], &ck, &one, &out[bi, 0, 0], &lout)
    return out_arr


def conv1d_backward(double[:, :, ::1] gout, double[:, :, ::1] x, double[:, :, ::1] w,
                    int stride, int pad):
    cdef int b = x.shape[0], cin = x.shape[1], length = x.shape[2]
    cdef int cout = w.shape[0], k = w.shape[2]
    cdef int lout = gout.shape[2]
    cdef int ck = cin * k
    gx_arr = np.zeros((b, cin, length))
    gw_arr = np.zeros((cout, cin, k))
    gb_arr = np.zeros(cout)
    cols_arr = np.empty((ck, lout))
    gcols_arr = np.empty((ck, lout))
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[:, :, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef double[:, ::1] cols = cols_arr
    cdef double[:, ::1] gcols = gcols_arr
    cdef double one = 1.0, zero = 0.0, acc
    cdef int bi, co, o, c, j, i
    with nogil:
        for bi in range(b):
            for co in range(cout):
                acc = 0.0
                for o in range(lout):
                    acc = acc + gout[bi, co, o]
                gb[co] += acc
            _im2col(&x[bi, 0, 0], &cols[0, 0], cin, length, k, stride, pad, lout)
            # gw[cout, ck] += gout_b[cout, lout] @ cols^T
            dgemm("T", "N", &ck, &cout, &lout, &one, &cols[0, 0], &lout,
                  &gout[bi, 0, 0], &lout, &one, &gw[0, 0, 0], &ck)
            # gcols[ck, lout] = w^T @ gout_b
            dgemm("N", "T", &lout, &ck, &cout, &one, &gout[bi, 0, 0], &lout,
                  &w[0, 0, 0], &ck, &zero, &gcols[0, 0], &lout)
            for c in range(cin):
                for j in range(k):
                    for o in range(lout):
                        i = o * stride - pad + j
                        if 0 <= i < length:
                            gx[bi, c, i] += gcols[c * k + j, o]
    return gx_arr, gw_arr, gb_arr


def group_norm_forward(double[:, :, ::1] x, double[::1] gamma, double[::1] beta,
                       int groups, double eps):
    cdef int b = x.shape[0], c = x.shape[1], length = x.shape[2]
    cdef int cpg = c // groups
    cdef int n = cpg * length
    out_arr = np.empty((b, c, length))
    xhat_arr = np.empty((b, c, length))
    rstd_arr = np.empty((b, groups))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, :, ::1] xhat = xhat_arr
    cdef double[:, ::1] rstd = rstd_arr
    cdef int bi, g, ch, l
    cdef double mean, var, d, r, xh
    with nogil:
        for bi in range(b):
            for g in range(groups):
                mean = 0.0
                for ch in range(g * cpg, (g + 1) * cpg):
                    for l in range(length):
                        mean = mean + x[bi, ch, l]
                mean = mean / n
                var = 0.0
                for ch in range(g * cpg, (g + 1) * cpg):
                    for l in range(length):
                        d = x[bi, ch, l] - mean
                        var = var + d * d
                var = var / n
                r = 1.0 / sqrt(var + eps)
                rstd[bi, g] = r
                for ch in range(g * cpg, (g + 1) * cpg):
                    for l in range(length):
                        xh = (x[bi, ch, l] - mean) * r
                        xhat[bi, ch, l] = xh
                        out[bi, ch, l] = xh * gamma[ch] + beta[ch]
    return out_arr, xhat_arr, rstd_arr


def group_norm_backward(double[:, :, ::1] gout, double[:, :, ::1] xhat,
                        double[:, ::1] rstd, double[::1] gamma, int groups):
    cdef int b = gout.shape[0], c = gout.shape[1], length = gout.shape[2]
    cdef int cpg = c // groups
    cdef int n = cpg * length
    gx_arr = np.empty((b, c, length))
    ggamma_arr = np.zeros(c)
    gbeta_arr = np.zeros(c)
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[::1] ggamma = ggamma_arr
    cdef double[::1] gbeta = gbeta_arr
    cdef int bi, g, ch, l
    cdef double m1, m2, gh, r
    with nogil:
        for bi in range(b):
            for g in range(groups):
                m1 = 0.0
                m2 = 0.0
                for ch in range(g * cpg, (g + 1) * cpg):
                    for l in range(length):
                        gh = gout[bi, ch, l] * gamma[ch]
                        m1 = m1 + gh
                        m2 = m2 + gh * xhat[bi, ch, l]
                        ggamma[ch] += gout[bi, ch, l] * xhat[bi, ch, l]
                        gbeta[ch] += gout[bi, ch, l]
                m1 = m1 / n
                m2 = m2 / n
                r = rstd[bi, g]
                for ch in range(g * cpg, (g + 1) * cpg):
                    for l in range(length):
                        gh = gout[bi, ch, l] * gamma[ch]
                        gx[bi, ch, l] = r * (gh - m1 - xhat[bi, ch, l] * m2)
    return gx_arr, ggamma_arr, gbeta_arr


cdef inline double _tanh_softplus(double v, double* sig) noexcept nogil:
    # tanh(log(1 + e^v)) = n / (n + 2) with n = e^v (e^v + 2); one exp per element
    cdef double e
    if v > 20.0:
        sig[0] = 1.0
        return 1.0
    e = exp(v)
    sig[0] = e / (1.0 + e)
    e = e * (e + 2.0)
    return e / (e + 2.0)


def mish_forward(x):
    src = np.ascontiguousarray(x)
    out_arr = np.empty_like(src)
    cdef double[::1] xs = src.reshape(-1)
    cdef double[::1] o = out_arr.reshape(-1)
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double sig
    with nogil:
        for i in range(n):
            o[i] = xs[i] * _tanh_softplus(xs[i], &sig)
    return out_arr


def mish_backward(gout, x):
    src = np.ascontiguousarray(x)
    g = np.ascontiguousarray(gout)
    out_arr = np.empty_like(src)
    cdef double[::1] xs = src.reshape(-1)
    cdef double[::1] gs = g.reshape(-1)
    cdef double[::1] o = out_arr.reshape(-1)
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double v, tsp, sig
    with nogil:
        for i in range(n):
            v = xs[i]
            tsp = _tanh_softplus(v, &sig)
            o[i] = gs[i] * (tsp + v * (1.0 - tsp * tsp) * sig)
    return out_arr
