"""Adaptive moment-estimation optimizer and gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .params import ParameterStore


@dataclass
class OptimizerState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their global L2 norm is <= max_norm.

    Returns the pre-clip norm.
    """
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * scale
    return norm


def adam_step(params: ParameterStore, grads: dict[str, np.ndarray],
              state: OptimizerState) -> OptimizerState:
    """One bias-corrected Adam update, in place on `params`."""
    for name, param in params.items():
        if name not in grads:
            raise ContractError(f"gradient missing for parameter '{name}'")
        if grads[name].shape != param.data.shape:
            raise ContractError(
                f"gradient shape {grads[name].shape} does not match "
                f"parameter '{name}' shape {param.data.shape}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, param in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        param.data = param.data - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state
