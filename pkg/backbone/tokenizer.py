"""
backbone/tokenizer.py
Patch tokenizer (mini-PointNet) and center positional embedding of the
frozen backbone.

  tokenize:         per point 3 → d/2 → d with a leaky rectifier, max-pool over the patch
  positional_embed: per center 3 → d → d with a leaky rectifier
"""

import numpy as np

from backbone.params import ParamStore
from errors import GroupingError
from numerics import ops
from numerics.autodiff import Node, constant, scope

TOKENIZER = "backbone/tokenizer"
POSEMB = "backbone/posemb"


def build_tokenizer_params(store: ParamStore, d: int, gen, dtype) -> None:
    store.add_linear(f"{TOKENIZER}/fc1", 3, d // 2, gen, dtype)
    store.add_linear(f"{TOKENIZER}/fc2", d // 2, d, gen, dtype)


def build_posemb_params(store: ParamStore, d: int, gen, dtype) -> None:
    store.add_linear(f"{POSEMB}/fc1", 3, d, gen, dtype)
    store.add_linear(f"{POSEMB}/fc2", d, d, gen, dtype)


def _two_layer(x: Node, store: ParamStore, prefix: str) -> Node:
    h = ops.linear_apply(x, store[f"{prefix}/fc1/weight"], store[f"{prefix}/fc1/bias"])
    h = ops.leaky_rectifier(h)
    return ops.linear_apply(h, store[f"{prefix}/fc2/weight"], store[f"{prefix}/fc2/bias"])


def tokenize(groups: np.ndarray, store: ParamStore) -> Node:
    """groups (B, n, g, 3) → initial tokens T^0 (B, n, d)."""
    if groups.ndim != 4 or groups.shape[2] == 0:
        raise GroupingError(f"tokenize: expected non-empty (B, n, g, 3) groups, got {groups.shape}")
    dtype = store[f"{TOKENIZER}/fc1/weight"].value.dtype
    with scope("tokenizer"):
        per_point = _two_layer(constant(groups, dtype=dtype), store, TOKENIZER)
        return ops.row_max_pool(per_point)


def positional_embed(centers: np.ndarray, store: ParamStore) -> Node:
    """centers (B, n, 3) → (B, n, d), added at the input of every block."""
    dtype = store[f"{POSEMB}/fc1/weight"].value.dtype
    with scope("posemb"):
        return _two_layer(constant(centers, dtype=dtype), store, POSEMB)
