"""
training/optim.py
AdamW with decoupled weight decay over the tunable parameters only.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from config import ADAM_BETAS, ADAM_EPS
from errors import OptimizerError
from numerics.autodiff import Node

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    params: list[Node],
    state: AdamState,
    lr: float,
    weight_decay: float,
    betas: tuple[float, float] = ADAM_BETAS,
    eps: float = ADAM_EPS,
) -> None:
    """
    θ ← θ(1 − lr·wd) − lr · m̂ / (√v̂ + ε), with bias-corrected moments.
    Every parameter passed in must carry a grad from the last backward().
    """
    missing = [p.name for p in params if p.grad is None]
    if missing:
        raise OptimizerError(f"no gradient for tunable parameter(s): {missing[:5]}")

    beta1, beta2 = betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for p in params:
        key = p.name
        g = p.grad.astype(np.float64)
        m = state.m.get(key)
        v = state.v.get(key)
        m = (1.0 - beta1) * g if m is None else beta1 * m + (1.0 - beta1) * g
        v = (1.0 - beta2) * g * g if v is None else beta2 * v + (1.0 - beta2) * g * g
        state.m[key], state.v[key] = m, v

        theta = p.value.astype(np.float64) * (1.0 - lr * weight_decay)
        theta = theta - lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        p.value = theta.astype(p.value.dtype)


def zero_grads(params: list[Node]) -> None:
    for p in params:
        p.grad = None
