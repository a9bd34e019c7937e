# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled 1D convolution kernels (same padding, stride 1).

Loops are ordered so the innermost runs contiguously over the time axis,
which lets the C compiler vectorize the multiply-accumulate.
"""

import numpy as np


def conv1d_forward(double[:, :, ::1] x, double[:, :, ::1] w, double[::1] b):
    cdef Py_ssize_t B = x.shape[0], Cin = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t Cout = w.shape[0], K = w.shape[2]
    cdef Py_ssize_t pad = K // 2
    cdef Py_ssize_t bi, o, c, t, k, off, lo, hi
    cdef double wv, bv

    out_arr = np.empty((B, Cout, L), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    for bi in range(B):
        for o in range(Cout):
            bv = b[o]
            for t in range(L):
                out[bi, o, t] = bv
            for c in range(Cin):
                for k in range(K):
                    wv = w[o, c, k]
                    off = k - pad
                    lo = -off if off < 0 else 0
                    hi = L - off if off > 0 else L
                    for t in range(lo, hi):
                        out[bi, o, t] += wv * x[bi, c, t + off]
    return out_arr


def conv1d_backward(double[:, :, ::1] x, double[:, :, ::1] w, double[:, :, ::1] grad_out):
    cdef Py_ssize_t B = x.shape[0], Cin = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t Cout = w.shape[0], K = w.shape[2]
    cdef Py_ssize_t pad = K // 2
    cdef Py_ssize_t bi, o, c, t, k, off, lo, hi
    cdef double wv, g, acc

    gx_arr = np.zeros((B, Cin, L), dtype=np.float64)
    gw_arr = np.zeros((Cout, Cin, K), dtype=np.float64)
    gb_arr = np.zeros(Cout, dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[:, :, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr

    for bi in range(B):
        for o in range(Cout):
            acc = 0.0
            for t in range(L):
                acc += grad_out[bi, o, t]
            gb[o] += acc
            for c in range(Cin):
                for k in range(K):
                    wv = w[o, c, k]
                    off = k - pad
                    lo = -off if off < 0 else 0
                    hi = L - off if off > 0 else L
                    acc = 0.0
                    for t in range(lo, hi):
                        g = grad_out[bi, o, t]
                        acc += g * x[bi, c, t + off]
                        gx[bi, c, t + off] += g * wv
                    gw[o, c, k] += acc
    return gx_arr, gw_arr, gb_arr
