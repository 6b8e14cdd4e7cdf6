"""
stag/blocks.py
The two per-block updates of the side network.

  accumulate:  x^l = D(t^{l−1}) + x^{l−1}    (A-blocks, and H^l in M-blocks)
  modulate:    t^l ← U(x^l) + t^l             (M-blocks only)
"""

from numerics import ops
from numerics.autodiff import Node


def accumulate(t_prev: Node, x_prev: Node, D: tuple[Node, Node]) -> Node:
    weight, bias = D
    return ops.add(ops.linear_apply(t_prev, weight, bias), x_prev)


def modulate(x: Node, t: Node, U: tuple[Node, Node]) -> Node:
    weight, bias = U
    return ops.add(ops.linear_apply(x, weight, bias), t)
