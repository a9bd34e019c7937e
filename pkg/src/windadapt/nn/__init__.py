"""Numerical core: layers, the fixed-topology network, Adam, checkpoints."""

from .backend import BACKEND, conv1d_backward, conv1d_forward
from .checkpoint import group_byte_ranges, load_checkpoint, save_checkpoint
from .layers import (
    batchnorm_backward,
    batchnorm_forward,
    dense_backward,
    dense_forward,
    relu,
    relu_backward,
    softmax_cross_entropy,
)
from .model import (
    FC_GROUPS,
    LEARNABLE_GROUPS,
    PARAM_GROUPS,
    Architecture,
    FreezeMask,
    ModelParams,
    backward,
    forward,
    init_params,
    loss_and_grads,
)
from .optim import AdamState, adam_step

__all__ = [
    "BACKEND", "conv1d_forward", "conv1d_backward",
    "batchnorm_forward", "batchnorm_backward", "relu", "relu_backward",
    "dense_forward", "dense_backward", "softmax_cross_entropy",
    "Architecture", "ModelParams", "FreezeMask", "init_params",
    "forward", "backward", "loss_and_grads",
    "PARAM_GROUPS", "LEARNABLE_GROUPS", "FC_GROUPS",
    "AdamState", "adam_step",
    "save_checkpoint", "load_checkpoint", "group_byte_ranges",
]
