"""Adam with bias correction and freeze-mask support."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import LEARNABLE_GROUPS, FreezeMask, ModelParams


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ModelParams, lr: float = 0.001) -> "AdamState":
        state = cls(lr=lr)
        for g in LEARNABLE_GROUPS:
            state.m[g] = np.zeros_like(params.group(g))
            state.v[g] = np.zeros_like(params.group(g))
        return state


def adam_step(params: ModelParams, grads: dict[str, np.ndarray],
              state: AdamState, mask: FreezeMask) -> None:
    """One in-place update of every trainable group; frozen groups and their
    moments are untouched."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for g in LEARNABLE_GROUPS:
        if not mask.trainable[g]:
            continue
        grad = grads[g]
        m, v = state.m[g], state.v[g]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / bc1
        v_hat = v / bc2
        params.group(g)[...] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
