"""Layer forward/backward passes. All math is float64; gradients are analytic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalDivergence
from .backend import conv1d_backward, conv1d_forward  # noqa: F401  (re-exported)

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass
class BNCache:
    mode: str
    x: np.ndarray
    xhat: np.ndarray
    gamma: np.ndarray
    inv_std: np.ndarray  # per channel


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    run_mean: np.ndarray,
    run_var: np.ndarray,
    mode: str,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
    update_stats: bool = True,
) -> tuple[np.ndarray, BNCache]:
    """Per-channel normalization of B×C×L input.

    Train mode uses the batch mean and biased variance and (unless
    update_stats is off) folds them into the running statistics in place.
    Eval mode normalizes by the running statistics and never mutates them.
    """
    if mode == "train":
        n = x.shape[0] * x.shape[2]
        if n < 2:
            raise ValueError("batch norm needs at least 2 values per channel in train mode")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))  # biased (1/n)
        if update_stats:
            run_mean *= 1.0 - momentum
            run_mean += momentum * mean
            run_var *= 1.0 - momentum
            run_var += momentum * var
    elif mode == "eval":
        mean, var = run_mean, run_var
    else:
        raise ValueError(f"unknown batch norm mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    y = gamma[None, :, None] * xhat + beta[None, :, None]
    return y, BNCache(mode=mode, x=x, xhat=xhat, gamma=gamma, inv_std=inv_std)


def batchnorm_backward(cache: BNCache, grad_out: np.ndarray):
    """Gradients through batch norm, including the mean/variance paths in train mode."""
    xhat, gamma, inv_std = cache.xhat, cache.gamma, cache.inv_std
    grad_gamma = np.einsum("bcl,bcl->c", grad_out, xhat)
    grad_beta = grad_out.sum(axis=(0, 2))
    dxhat = grad_out * gamma[None, :, None]
    if cache.mode == "eval":
        grad_x = dxhat * inv_std[None, :, None]
    else:
        n = grad_out.shape[0] * grad_out.shape[2]
        sum_dxhat = dxhat.sum(axis=(0, 2))
        sum_dxhat_xhat = np.einsum("bcl,bcl->c", dxhat, xhat)
        grad_x = (inv_std[None, :, None] / n) * (
            n * dxhat - sum_dxhat[None, :, None] - xhat * sum_dxhat_xhat[None, :, None]
        )
    return grad_x, grad_gamma, grad_beta


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # subgradient at exactly 0 is 0
    return np.where(x > 0.0, grad_out, 0.0)


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ValueError(f"dense shape mismatch: x{x.shape} w{w.shape} b{b.shape}")
    return x @ w.T + b


def dense_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray):
    grad_x = grad_out @ w
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    return grad_x, grad_w, grad_b


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    n_cls = logits.shape[1]
    if labels.min() < 0 or labels.max() >= n_cls:
        raise ValueError(f"label outside [0, {n_cls})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    b = logits.shape[0]
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(b), labels].mean())
    grad = probs.copy()
    grad[np.arange(b), labels] -= 1.0
    return loss, grad / b


def check_finite(a: np.ndarray, where: str) -> None:
    if not np.isfinite(a).all():
        raise NumericalDivergence(f"non-finite values in {where}")
