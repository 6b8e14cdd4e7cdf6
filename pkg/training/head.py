"""
training/head.py
Three-layer MLP classification head over pooled tokens.

pooled = [max over tokens ‖ mean over tokens]  (2d)
logits = L3(act(L2(act(L1(pooled)))))          dropout after each act while training
"""

from typing import Optional

import numpy as np

from backbone.params import ParamStore
from config import HEAD_HIDDEN
from numerics import ops
from numerics.autodiff import Node, scope
from numerics.rng import RngStream

HEAD = "head"


def head_param_count(d: int, num_classes: int, hidden: int = HEAD_HIDDEN) -> int:
    return (2 * d * hidden + hidden) + (hidden * hidden + hidden) + (hidden * num_classes + num_classes)


def build_head_params(store: ParamStore, d: int, num_classes: int, rng: RngStream, dtype) -> None:
    gen = rng.child("head").generator()
    store.add_linear(f"{HEAD}/fc1", 2 * d, HEAD_HIDDEN, gen, dtype)
    store.add_linear(f"{HEAD}/fc2", HEAD_HIDDEN, HEAD_HIDDEN, gen, dtype)
    store.add_linear(f"{HEAD}/fc3", HEAD_HIDDEN, num_classes, gen, dtype)
    store.set_tunable(True, prefix=f"{HEAD}/")


def _dropout(x: Node, rate: float, gen: Optional[np.random.Generator]) -> Node:
    if gen is None or rate <= 0.0:
        return x
    keep = gen.random(x.shape) >= rate
    return ops.mask_multiply(x, keep / (1.0 - rate))


def prediction_head(
    tokens: Node,
    store: ParamStore,
    dropout: float = 0.0,
    rng: Optional[RngStream] = None,
) -> Node:
    """tokens (B, n, d) → logits (B, C). Dropout applies only when rng is given."""
    gen = rng.generator() if rng is not None else None
    with scope("head"):
        pooled = ops.concat_cols(ops.row_max_pool(tokens), ops.row_mean_pool(tokens))
        h = ops.leaky_rectifier(ops.linear_apply(pooled, store[f"{HEAD}/fc1/weight"], store[f"{HEAD}/fc1/bias"]))
        h = _dropout(h, dropout, gen)
        h = ops.leaky_rectifier(ops.linear_apply(h, store[f"{HEAD}/fc2/weight"], store[f"{HEAD}/fc2/bias"]))
        h = _dropout(h, dropout, gen)
        return ops.linear_apply(h, store[f"{HEAD}/fc3/weight"], store[f"{HEAD}/fc3/bias"])
