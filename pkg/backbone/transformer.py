"""
backbone/transformer.py
The frozen point-cloud Transformer that the side network wraps.

Pre-norm blocks with the positional embedding added at every block input:

    T ← T + MHSA(LN(T + P))
    T ← T + MLP(LN(T))

followed by one final layer norm before the prediction head. There is no
classification token; the head pools over all n tokens.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from backbone.params import ParamStore
from backbone.tokenizer import build_posemb_params, build_tokenizer_params, positional_embed, tokenize
from errors import ConfigError
from numerics import ops
from numerics.autodiff import Node, scope
from numerics.rng import RngStream

logger = logging.getLogger(__name__)

DTYPES = {"single": np.float32, "double": np.float64}


@dataclass(frozen=True)
class BackboneConfig:
    d: int = 32
    L: int = 4
    n: int = 16
    heads: int = 4
    mlp_ratio: int = 4
    group_size: int = 16

    def __post_init__(self):
        if self.d <= 0 or self.L < 0 or self.n <= 0 or self.heads <= 0:
            raise ConfigError(f"invalid backbone sizes: {self}")
        if self.d % self.heads:
            raise ConfigError(f"d={self.d} is not divisible by heads={self.heads}")
        if self.d % 2:
            raise ConfigError(f"d={self.d} must be even (tokenizer hidden width d/2)")


@dataclass
class TokenSet:
    tokens: Node                    # (B, n, d), symbol T^l
    centers: np.ndarray             # (B, n, 3), symbol C


def block_prefix(l: int) -> str:
    return f"backbone/block{l}"


def _block_params(store: ParamStore, cfg: BackboneConfig, l: int, gen, dtype) -> None:
    d, hidden = cfg.d, cfg.mlp_ratio * cfg.d
    prefix = block_prefix(l)
    store.add_norm(f"{prefix}/ln1", d, dtype)
    for proj in ("q", "k", "v", "proj"):
        store.add_linear(f"{prefix}/attn/{proj}", d, d, gen, dtype)
    store.add_norm(f"{prefix}/ln2", d, dtype)
    store.add_linear(f"{prefix}/mlp/fc1", d, hidden, gen, dtype)
    store.add_linear(f"{prefix}/mlp/fc2", hidden, d, gen, dtype)


def _linear(x: Node, store: ParamStore, prefix: str) -> Node:
    return ops.linear_apply(x, store[f"{prefix}/weight"], store[f"{prefix}/bias"])


def multi_head_attention(x: Node, store: ParamStore, prefix: str, heads: int) -> Node:
    """softmax(QKᵀ/√(d/heads))V per head, heads concatenated, then projected."""
    batch, n, d = x.shape
    dh = d // heads

    def split(t: Node) -> Node:
        return ops.transpose(ops.reshape(t, (batch, n, heads, dh)), (0, 2, 1, 3))

    q = split(_linear(x, store, f"{prefix}/q"))
    k = split(_linear(x, store, f"{prefix}/k"))
    v = split(_linear(x, store, f"{prefix}/v"))
    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
    attn = ops.row_softmax(scores)
    out = ops.matmul(attn, v)
    out = ops.reshape(ops.transpose(out, (0, 2, 1, 3)), (batch, n, d))
    return _linear(out, store, f"{prefix}/proj")


def transformer_block(tokens: Node, pos: Node, store: ParamStore, l: int, heads: int) -> Node:
    prefix = block_prefix(l)
    with scope(f"backbone.block{l}"):
        h = ops.layer_norm(ops.add(tokens, pos), store[f"{prefix}/ln1/gamma"], store[f"{prefix}/ln1/beta"])
        tokens = ops.add(tokens, multi_head_attention(h, store, f"{prefix}/attn", heads))
        h = ops.layer_norm(tokens, store[f"{prefix}/ln2/gamma"], store[f"{prefix}/ln2/beta"])
        h = ops.leaky_rectifier(_linear(h, store, f"{prefix}/mlp/fc1"))
        return ops.add(tokens, _linear(h, store, f"{prefix}/mlp/fc2"))


class Backbone:
    """Tokenizer, positional embedding, L blocks and a final norm; frozen unless told otherwise."""

    def __init__(self, config: BackboneConfig, rng: RngStream, precision: str = "single"):
        if precision not in DTYPES:
            raise ConfigError(f"unknown precision {precision!r}")
        self.config = config
        self.dtype = DTYPES[precision]
        self.store = ParamStore()
        gen = rng.child("backbone").generator()
        build_tokenizer_params(self.store, config.d, gen, self.dtype)
        build_posemb_params(self.store, config.d, gen, self.dtype)
        for l in range(1, config.L + 1):
            _block_params(self.store, config, l, gen, self.dtype)
        self.store.add_norm("backbone/final_norm", config.d, self.dtype)
        logger.info("[BACKBONE] d=%d L=%d n=%d heads=%d | %d frozen parameters",
                    config.d, config.L, config.n, config.heads, self.store.count())

    def load_weights(self, path: Path) -> None:
        """Replace the random frozen weights with ones from a STAGW1 file."""
        from storage.local_storage import load_params

        self.store.load_state(load_params(path), strict=True)

    # ---- forward pieces ----

    def embed(self, groups: np.ndarray, centers: np.ndarray) -> tuple[TokenSet, Node]:
        tokens = tokenize(groups, self.store)
        pos = positional_embed(centers, self.store)
        return TokenSet(tokens, centers), pos

    def block(self, l: int, tokens: TokenSet, pos: Node) -> TokenSet:
        out = transformer_block(tokens.tokens, pos, self.store, l, self.config.heads)
        return TokenSet(out, tokens.centers)

    def final_norm(self, tokens: TokenSet) -> Node:
        with scope("backbone.final_norm"):
            return ops.layer_norm(
                tokens.tokens, self.store["backbone/final_norm/gamma"], self.store["backbone/final_norm/beta"]
            )

    def run_blocks(
        self,
        tokens: TokenSet,
        pos: Node,
        after_block: Optional[Callable[[int, TokenSet, TokenSet], TokenSet]] = None,
    ) -> TokenSet:
        """Blocks 1..L; after_block(l, T^{l-1}, T^l) may replace T^l (the side network's hook)."""
        for l in range(1, self.config.L + 1):
            nxt = self.block(l, tokens, pos)
            if after_block is not None:
                nxt = after_block(l, tokens, nxt)
            tokens = nxt
        return tokens
