"""
stag/forward.py
Token adaptation through the side network, block by block:

    X^0 = 0
    for l = 1..L:
        T^l = block_l(T^{l−1})
        if l ≤ A:  X^l = accumulate(T^{l−1}, X^{l−1})
        else:      H^l = accumulate(T^{l−1}, X^{l−1})
                   X^l = G(H^l, C)
                   T^l = modulate(X^l, T^l)
    return T^L

Side computations run under the `side.block<l>` scope so the backward log
separates them from the frozen backbone's own nodes.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from backbone.tokenizer import positional_embed
from backbone.transformer import Backbone, TokenSet
from geometry.neighbors import batch_knn_graph
from numerics.autodiff import Node, constant, scope
from stag.blocks import accumulate, modulate
from stag.params import SideParams
from stag.refine import REFINE_FUNCTIONS

logger = logging.getLogger(__name__)


@dataclass
class BlockTrace:
    block: int
    kind: str                       # "A" or "M"
    x: np.ndarray                   # X^l
    h: Optional[np.ndarray]         # H^l (M-blocks only)
    t: np.ndarray                   # T^l after modulation


def stag_forward(
    T0: TokenSet,
    backbone: Backbone,
    side: SideParams,
    graph: Optional[np.ndarray] = None,
    pos: Optional[Node] = None,
    trace: Optional[list[BlockTrace]] = None,
) -> TokenSet:
    """Run the frozen blocks with the side network attached; returns T^L."""
    config = side.config
    if graph is None and config.m_blocks:
        graph = batch_knn_graph(T0.centers, config.k)
    if pos is None:
        pos = positional_embed(T0.centers, backbone.store)
    refine = REFINE_FUNCTIONS[config.refine_fn]

    batch, n, _ = T0.tokens.shape
    state = {"x": constant(np.zeros((batch, n, config.d_prime), dtype=T0.tokens.value.dtype))}

    def after_block(l: int, prev: TokenSet, cur: TokenSet) -> TokenSet:
        with scope(f"side.block{l}"):
            if l <= config.A:
                state["x"] = accumulate(prev.tokens, state["x"], side.down(l))
                if trace is not None:
                    trace.append(BlockTrace(l, "A", state["x"].value, None, cur.tokens.value))
                return cur
            h = accumulate(prev.tokens, state["x"], side.down(l))
            state["x"] = refine(h, graph, side.refine(l))
            tokens = modulate(state["x"], cur.tokens, side.up(l))
            if trace is not None:
                trace.append(BlockTrace(l, "M", state["x"].value, h.value, tokens.value))
            return TokenSet(tokens, cur.centers)

    return backbone.run_blocks(T0, pos, after_block)


def bare_forward(T0: TokenSet, backbone: Backbone, pos: Optional[Node] = None) -> TokenSet:
    """The frozen backbone alone, T^0 → T^L."""
    if pos is None:
        pos = positional_embed(T0.centers, backbone.store)
    return backbone.run_blocks(T0, pos)
