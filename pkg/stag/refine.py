"""
stag/refine.py
Token refinement functions G of a modulation block, all aggregating over the
kNN graph of patch centers with an element-wise max:

  efficient_edgeconv  φ(max_j act(h_i W′ + h_j W2))     two per-node projections, gathered
  original_edgeconv   φ(max_j act([h_i ‖ h_j − h_i] W))  one projection per edge (k× the work)
  simple_graph_conv   φ(max_j act(h_j W))
  max_pool            max_j h_j                          no parameters

act is the leaky rectifier, applied to edge features before pooling; φ is
linear. W′ and W2 carry no bias, so with W = [W1; W2] the efficient form
with W′ = W1 − W2 reproduces the original exactly.
"""

from typing import Callable, Union

import numpy as np

from errors import GraphError
from geometry.neighbors import NeighborGraph
from numerics import ops
from numerics.autodiff import Node

GraphLike = Union[NeighborGraph, np.ndarray]


def _edges(h: Node, graph: GraphLike) -> tuple[Node, np.ndarray, np.ndarray, int]:
    """Batch view of h plus flattened self / neighbor index tables of shape (B, n·k)."""
    table = graph.indices if isinstance(graph, NeighborGraph) else np.asarray(graph)
    if h.value.ndim == 2:
        h = ops.reshape(h, (1,) + h.shape)
    if table.ndim == 2:
        table = table[None]
    batch, n, _ = h.shape
    if table.shape[:2] != (batch, n):
        raise GraphError(f"graph of shape {table.shape} does not match tokens {h.shape}")
    k = table.shape[2]
    if k < 1:
        raise GraphError("every center needs at least one neighbor")
    self_idx = np.broadcast_to(np.repeat(np.arange(n), k), (batch, n * k))
    return h, self_idx, table.reshape(batch, n * k), k


def _pool(edge: Node, k: int, single: bool) -> Node:
    batch, rows, c = edge.shape
    pooled = ops.row_max_pool(ops.reshape(edge, (batch, rows // k, k, c)))
    return ops.reshape(pooled, pooled.shape[1:]) if single else pooled


def _phi(x: Node, params: dict[str, Node]) -> Node:
    return ops.linear_apply(x, params["phi/weight"], params["phi/bias"])


def refine_efficient_edgeconv(h: Node, graph: GraphLike, params: dict[str, Node]) -> Node:
    single = h.value.ndim == 2
    hb, self_idx, nb_idx, k = _edges(h, graph)
    own = ops.linear_apply(hb, params["w_prime"])
    other = ops.linear_apply(hb, params["w2"])
    edge = ops.leaky_rectifier(ops.add(ops.gather_rows(own, self_idx), ops.gather_rows(other, nb_idx)))
    return _phi(_pool(edge, k, single), params)


def refine_original_edgeconv(h: Node, graph: GraphLike, params: dict[str, Node]) -> Node:
    single = h.value.ndim == 2
    hb, self_idx, nb_idx, k = _edges(h, graph)
    h_i = ops.gather_rows(hb, self_idx)
    h_j = ops.gather_rows(hb, nb_idx)
    edge = ops.linear_apply(ops.concat_cols(h_i, ops.subtract(h_j, h_i)), params["w"])
    return _phi(_pool(ops.leaky_rectifier(edge), k, single), params)


def refine_simple_graph_conv(h: Node, graph: GraphLike, params: dict[str, Node]) -> Node:
    single = h.value.ndim == 2
    hb, _, nb_idx, k = _edges(h, graph)
    projected = ops.linear_apply(hb, params["w"])
    edge = ops.leaky_rectifier(ops.gather_rows(projected, nb_idx))
    return _phi(_pool(edge, k, single), params)


def refine_max_pool(h: Node, graph: GraphLike, params: dict[str, Node] | None = None) -> Node:
    single = h.value.ndim == 2
    hb, _, nb_idx, k = _edges(h, graph)
    return _pool(ops.gather_rows(hb, nb_idx), k, single)


REFINE_FUNCTIONS: dict[str, Callable[[Node, GraphLike, dict], Node]] = {
    "efficient_edgeconv": refine_efficient_edgeconv,
    "original_edgeconv":  refine_original_edgeconv,
    "simple_graph_conv":  refine_simple_graph_conv,
    "max_pool":           refine_max_pool,
}
