"""Selects the convolution kernel backend at import time.

The compiled Cython extension is used when available; otherwise the numpy
fallback. Set WINDADAPT_BACKEND=numpy or =cython to force one.
"""

from __future__ import annotations

import os

import numpy as np

from . import _conv_numpy

_forced = os.environ.get("WINDADAPT_BACKEND", "").lower()

if _forced == "numpy":
    _impl, BACKEND = _conv_numpy, "numpy"
else:
    try:
        from . import _conv_ext as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl, BACKEND = _conv_numpy, "numpy"


def _c64(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ValueError(f"conv1d shape mismatch: x{x.shape} w{w.shape} b{b.shape}")
    return _impl.conv1d_forward(_c64(x), _c64(w), _c64(b))


def conv1d_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray):
    if grad_out.shape != (x.shape[0], w.shape[0], x.shape[2]):
        raise ValueError(f"conv1d grad shape mismatch: x{x.shape} w{w.shape} g{grad_out.shape}")
    return _impl.conv1d_backward(_c64(x), _c64(w), _c64(grad_out))
