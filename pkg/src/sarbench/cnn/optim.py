"""Adaptive moment estimation (bias-corrected first/second moments)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import PARAM_KEYS, ModelParams

__all__ = ["AdamState", "init_adam", "adam_step"]


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]


def init_adam(params: ModelParams) -> AdamState:
    return AdamState(
        step=0,
        m={key: np.zeros_like(arr) for key, arr in params.trainable().items()},
        v={key: np.zeros_like(arr) for key, arr in params.trainable().items()},
    )


def adam_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place update of every trainable parameter, in fixed key order."""
    state.step += 1
    t = state.step
    bias1 = 1.0 - beta1**t
    bias2 = 1.0 - beta2**t
    for key in PARAM_KEYS:
        g = grads[key]
        m = state.m[key]
        v = state.v[key]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = (m / bias1) / (np.sqrt(v / bias2) + eps)
        getattr(params, key)[...] -= learning_rate * update
