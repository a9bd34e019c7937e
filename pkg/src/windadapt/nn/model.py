"""The Conv-BN-ReLU ×2 → FC-ReLU-FC classifier: parameters, init, forward, backward."""

from __future__ import annotations

import copy
from dataclasses import dataclass, fields

import numpy as np

from . import layers
from .layers import check_finite

# Serialization / traversal order of all tensor groups (running stats included).
PARAM_GROUPS = [
    "conv1_w", "conv1_b", "bn1_gamma", "bn1_beta", "bn1_run_mean", "bn1_run_var",
    "conv2_w", "conv2_b", "bn2_gamma", "bn2_beta", "bn2_run_mean", "bn2_run_var",
    "fc1_w", "fc1_b", "fc2_w", "fc2_b",
]
# Groups touched by the optimizer (running stats are state, not weights).
LEARNABLE_GROUPS = [g for g in PARAM_GROUPS if "run_" not in g]
FC_GROUPS = ["fc1_w", "fc1_b", "fc2_w", "fc2_b"]


@dataclass(frozen=True)
class Architecture:
    window_len: int  # W
    n_features: int  # F
    kernel: int = 3  # K, odd; same padding, stride 1
    c1: int = 32
    c2: int = 64
    hidden: int = 128  # H
    n_classes: int = 6  # N

    def __post_init__(self):
        vals = (self.window_len, self.n_features, self.kernel,
                self.c1, self.c2, self.hidden, self.n_classes)
        if any(v <= 0 for v in vals):
            raise ValueError("all architecture sizes must be positive")
        if self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd")

    @property
    def conv_out_len(self) -> int:
        # same padding, stride 1
        return self.window_len

    @property
    def flat_dim(self) -> int:
        return self.c2 * self.conv_out_len


@dataclass
class ModelParams:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    bn1_gamma: np.ndarray
    bn1_beta: np.ndarray
    bn1_run_mean: np.ndarray
    bn1_run_var: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    bn2_gamma: np.ndarray
    bn2_beta: np.ndarray
    bn2_run_mean: np.ndarray
    bn2_run_var: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    arch: Architecture

    def group(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def copy(self) -> "ModelParams":
        kw = {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}
        return ModelParams(**kw)


@dataclass(frozen=True)
class FreezeMask:
    """Trainability flag for each learnable group, plus whether BN running
    statistics are held fixed during training."""

    trainable: dict[str, bool]
    bn_stats_frozen: bool

    def __post_init__(self):
        if set(self.trainable) != set(LEARNABLE_GROUPS):
            raise ValueError("mask must cover every learnable group exactly once")

    @classmethod
    def all_trainable(cls) -> "FreezeMask":
        return cls(trainable={g: True for g in LEARNABLE_GROUPS}, bn_stats_frozen=False)

    @classmethod
    def fc_only(cls) -> "FreezeMask":
        return cls(trainable={g: g in FC_GROUPS for g in LEARNABLE_GROUPS},
                   bn_stats_frozen=True)


def init_params(arch: Architecture, seed: int) -> ModelParams:
    """He-normal conv/FC weights, zero biases, identity batch norm."""
    rng = np.random.default_rng(seed)

    def he(shape, fan_in):
        return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)

    a = arch
    return ModelParams(
        conv1_w=he((a.c1, a.n_features, a.kernel), a.n_features * a.kernel),
        conv1_b=np.zeros(a.c1),
        bn1_gamma=np.ones(a.c1), bn1_beta=np.zeros(a.c1),
        bn1_run_mean=np.zeros(a.c1), bn1_run_var=np.ones(a.c1),
        conv2_w=he((a.c2, a.c1, a.kernel), a.c1 * a.kernel),
        conv2_b=np.zeros(a.c2),
        bn2_gamma=np.ones(a.c2), bn2_beta=np.zeros(a.c2),
        bn2_run_mean=np.zeros(a.c2), bn2_run_var=np.ones(a.c2),
        fc1_w=he((a.hidden, a.flat_dim), a.flat_dim),
        fc1_b=np.zeros(a.hidden),
        fc2_w=he((a.n_classes, a.hidden), a.hidden),
        fc2_b=np.zeros(a.n_classes),
        arch=arch,
    )


def forward(params: ModelParams, batch: np.ndarray, mode: str,
            bn_stats_frozen: bool = False) -> tuple[np.ndarray, dict]:
    """Run the network on a B×W×F batch; returns logits (B×N) and a backward cache.

    When bn_stats_frozen is set, train-mode passes normalize by the stored
    running statistics (eval-style BN) and never update them.
    """
    a = params.arch
    if batch.ndim != 3 or batch.shape[1] != a.window_len or batch.shape[2] != a.n_features:
        raise ValueError(f"batch shape {batch.shape} does not match arch W={a.window_len} F={a.n_features}")
    x = np.ascontiguousarray(batch.transpose(0, 2, 1), dtype=np.float64)  # B×F×W

    bn_mode = "eval" if (mode == "eval" or bn_stats_frozen) else "train"

    c1 = layers.conv1d_forward(x, params.conv1_w, params.conv1_b)
    b1, bn1_cache = layers.batchnorm_forward(
        c1, params.bn1_gamma, params.bn1_beta, params.bn1_run_mean, params.bn1_run_var,
        mode=bn_mode)
    r1 = layers.relu(b1)
    c2 = layers.conv1d_forward(r1, params.conv2_w, params.conv2_b)
    b2, bn2_cache = layers.batchnorm_forward(
        c2, params.bn2_gamma, params.bn2_beta, params.bn2_run_mean, params.bn2_run_var,
        mode=bn_mode)
    r2 = layers.relu(b2)
    flat = r2.reshape(r2.shape[0], -1)
    f1 = layers.dense_forward(flat, params.fc1_w, params.fc1_b)
    rf = layers.relu(f1)
    logits = layers.dense_forward(rf, params.fc2_w, params.fc2_b)
    check_finite(logits, "forward logits")

    cache = dict(x=x, b1=b1, bn1=bn1_cache, r1=r1, b2=b2, bn2=bn2_cache,
                 flat=flat, f1=f1, rf=rf, shape_r2=r2.shape)
    return logits, cache


def backward(params: ModelParams, cache: dict, grad_logits: np.ndarray,
             fc_only: bool = False) -> dict[str, np.ndarray]:
    """Analytic gradients per learnable group.

    With fc_only the chain stops after the FC layers (the conv/BN gradients
    are never needed when those groups are frozen), which makes partial
    adaptation cheaper per step.
    """
    grads: dict[str, np.ndarray] = {}
    g_rf, grads["fc2_w"], grads["fc2_b"] = layers.dense_backward(
        cache["rf"], params.fc2_w, grad_logits)
    g_f1 = layers.relu_backward(cache["f1"], g_rf)
    g_flat, grads["fc1_w"], grads["fc1_b"] = layers.dense_backward(
        cache["flat"], params.fc1_w, g_f1)
    if fc_only:
        return grads

    g_r2 = g_flat.reshape(cache["shape_r2"])
    g_b2 = layers.relu_backward(cache["b2"], g_r2)
    g_c2, grads["bn2_gamma"], grads["bn2_beta"] = layers.batchnorm_backward(cache["bn2"], g_b2)
    g_r1, grads["conv2_w"], grads["conv2_b"] = layers.conv1d_backward(
        cache["r1"], params.conv2_w, g_c2)
    g_b1 = layers.relu_backward(cache["b1"], g_r1)
    g_c1, grads["bn1_gamma"], grads["bn1_beta"] = layers.batchnorm_backward(cache["bn1"], g_b1)
    _, grads["conv1_w"], grads["conv1_b"] = layers.conv1d_backward(
        cache["x"], params.conv1_w, g_c1)
    return grads


def loss_and_grads(params: ModelParams, batch: np.ndarray, labels: np.ndarray,
                   mask: FreezeMask) -> tuple[float, np.ndarray, dict[str, np.ndarray]]:
    """One training forward/backward pass honoring the freeze mask."""
    logits, cache = forward(params, batch, mode="train",
                            bn_stats_frozen=mask.bn_stats_frozen)
    loss, grad_logits = layers.softmax_cross_entropy(logits, labels)
    fc_only = all(not v for g, v in mask.trainable.items() if g not in FC_GROUPS)
    grads = backward(params, cache, grad_logits, fc_only=fc_only)
    for g in grads.values():
        check_finite(g, "gradients")
    return loss, logits, grads
