"""Pure-numpy 1D convolution kernels (same padding, stride 1)."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # x: B×Cin×L, w: Cout×Cin×K, b: Cout -> B×Cout×L
    k = w.shape[2]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    cols = sliding_window_view(xp, k, axis=2)  # B×Cin×L×K
    return np.einsum("ock,bclk->bol", w, cols, optimize=True) + b[None, :, None]


def conv1d_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray):
    k = w.shape[2]
    pad = k // 2
    l = x.shape[2]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    cols = sliding_window_view(xp, k, axis=2)

    grad_b = grad_out.sum(axis=(0, 2))
    grad_w = np.einsum("bol,bclk->ock", grad_out, cols, optimize=True)
    grad_xp = np.zeros_like(xp)
    for kk in range(k):
        grad_xp[:, :, kk:kk + l] += np.einsum("oc,bol->bcl", w[:, :, kk], grad_out, optimize=True)
    grad_x = grad_xp[:, :, pad:pad + l] if pad else grad_xp
    return grad_x, grad_w, grad_b
