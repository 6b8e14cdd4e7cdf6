"""
numerics/autodiff.py
Reverse-mode differentiation over dense numpy matrices.

A Node is created for every parameter, constant and operation result.
`requires_grad` is true for tunable parameters and for any node computed from
one; frozen parameters and constants carry `requires_grad=False`. backward()
walks only the grad-requiring part of the graph, so frozen subgraphs that feed
no tunable parameter are never visited (gradient elision).

While a Tape is active every created node is recorded together with the
current scope label, which is how the accounting module measures forward and
backward FLOPs per block.
"""

import contextlib
import contextvars
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from errors import ContractError

logger = logging.getLogger(__name__)

# backward_fn(grad_out, wanted) -> one gradient (or None) per parent
BackwardFn = Callable[[np.ndarray, tuple], Sequence[Optional[np.ndarray]]]

_ACTIVE_TAPE: contextvars.ContextVar = contextvars.ContextVar("active_tape", default=None)
_SCOPE: contextvars.ContextVar = contextvars.ContextVar("scope", default="")


# ---------------------------------------------------------------------------
# Graph nodes
# ---------------------------------------------------------------------------

class Node:
    __slots__ = (
        "value", "requires_grad", "grad", "op_tag", "parents",
        "backward_fn", "scope", "flops", "name", "is_param",
    )

    def __init__(
        self,
        value,
        requires_grad: bool = False,
        op_tag: str = "const",
        parents: tuple = (),
        backward_fn: Optional[BackwardFn] = None,
        flops: int = 0,
        name: Optional[str] = None,
        is_param: bool = False,
    ):
        self.value = np.asarray(value)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.op_tag = op_tag
        self.parents = parents
        self.backward_fn = backward_fn
        self.scope = _SCOPE.get()
        self.flops = flops
        self.name = name
        self.is_param = is_param
        tape = _ACTIVE_TAPE.get()
        if tape is not None:
            tape.record(self)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self) -> str:
        label = self.name or self.op_tag
        return f"Node({label}, shape={self.shape}, requires_grad={self.requires_grad})"


def constant(value, dtype=None) -> Node:
    return Node(np.asarray(value, dtype=dtype))


def parameter(value, name: str, tunable: bool) -> Node:
    """A leaf holding a model parameter; frozen parameters never require grad."""
    return Node(np.asarray(value), requires_grad=tunable, op_tag="param", name=name, is_param=True)


def make_op(value, op_tag: str, parents: tuple, backward_fn: BackwardFn, flops: int = 0) -> Node:
    requires_grad = any(p.requires_grad for p in parents)
    return Node(
        value,
        requires_grad=requires_grad,
        op_tag=op_tag,
        parents=parents,
        backward_fn=backward_fn,
        flops=flops,
    )


# ---------------------------------------------------------------------------
# Tape + scopes
# ---------------------------------------------------------------------------

@contextlib.contextmanager
def scope(name: str):
    """Label every node created inside the block (e.g. 'backbone.block3')."""
    token = _SCOPE.set(name)
    try:
        yield
    finally:
        _SCOPE.reset(token)


class Tape:
    """Records the nodes of one forward pass; one tape per training step."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._token = None

    def record(self, node: Node) -> None:
        self.nodes.append(node)

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)

    def forward_flops(self) -> int:
        return sum(node.flops for node in self.nodes)

    def forward_flops_by_scope(self) -> dict[str, int]:
        tally: dict[str, int] = {}
        for node in self.nodes:
            if node.flops:
                tally[node.scope] = tally.get(node.scope, 0) + node.flops
        return tally


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------

@dataclass
class VisitRecord:
    op_tag: str
    scope: str
    name: Optional[str]
    requires_grad: bool
    flops: int
    grad_operands: int

    @property
    def backward_flops(self) -> int:
        # one forward-equivalent per operand whose gradient was produced
        return self.flops * self.grad_operands


@dataclass
class BackwardLog:
    visits: list[VisitRecord] = field(default_factory=list)

    def scopes(self) -> set[str]:
        return {v.scope for v in self.visits}

    def backward_flops(self) -> int:
        return sum(v.backward_flops for v in self.visits)

    def backward_flops_by_scope(self) -> dict[str, int]:
        tally: dict[str, int] = {}
        for v in self.visits:
            if v.flops:
                tally[v.scope] = tally.get(v.scope, 0) + v.backward_flops
        return tally


def _topological_order(loss: Node, elide: bool) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in reversed(node.parents):
            if id(parent) in seen:
                continue
            if elide and not parent.requires_grad:
                continue
            stack.append((parent, False))
    return order


def backward(loss: Node, elide: bool = True) -> BackwardLog:
    """
    Populate .grad on every grad-requiring node between the tunable
    parameters and `loss`. With elide=False every reachable node is visited
    and frozen nodes receive grads too; tunable grads are identical.
    """
    if loss.value.size != 1:
        raise ContractError(f"loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss does not depend on any tunable parameter")

    order = _topological_order(loss, elide)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    log = BackwardLog()

    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        node.grad = g
        wanted = tuple(p.requires_grad or not elide for p in node.parents)
        produced = 0
        if node.backward_fn is not None and any(wanted):
            parent_grads = node.backward_fn(g, wanted)
            for position, (parent, want, pg) in enumerate(zip(node.parents, wanted, parent_grads)):
                if not want or pg is None:
                    continue
                # matrix-product nodes list their two factors first; a bias is not a factor
                if position < 2:
                    produced += 1
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
        log.visits.append(
            VisitRecord(node.op_tag, node.scope, node.name, node.requires_grad, node.flops, produced)
        )

    logger.debug("[AUTODIFF] backward visited %d node(s), elide=%s", len(log.visits), elide)
    return log
