"""
numerics/ops.py
Differentiable matrix operations used by the backbone, the side network and
the prediction head.

Values are numpy arrays of shape (rows, cols) or (batch, rows, cols); every
row-wise operation treats each matrix of a batch independently. The only
broadcast supported is a per-row bias in linear_apply.
"""

import logging
from typing import Optional

import numpy as np

from config import LAYER_NORM_EPS, LEAKY_SLOPE
from errors import DimensionError, IndexRangeError, NumericError
from numerics.autodiff import Node, make_op

logger = logging.getLogger(__name__)


def _swap_last(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def _require_same_shape(op: str, a: Node, b: Node) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


# ---------------------------------------------------------------------------
# Matrix products
# ---------------------------------------------------------------------------

def linear_apply(x: Node, W: Node, b: Optional[Node] = None) -> Node:
    """xW (+ b per row). W is (p, q) and shared across any leading batch axis."""
    if W.value.ndim != 2 or x.value.ndim < 2:
        raise DimensionError(f"linear_apply: need x (..., p) and W (p, q), got {x.shape} and {W.shape}")
    p, q = W.shape
    if x.shape[-1] != p:
        raise DimensionError(f"linear_apply: x has {x.shape[-1]} columns, W has {p} rows")
    if b is not None and b.shape != (q,):
        raise DimensionError(f"linear_apply: bias shape {b.shape}, expected ({q},)")
    if not np.all(np.isfinite(x.value)):
        raise NumericError("linear_apply: non-finite input")

    out = x.value @ W.value
    if b is not None:
        out = out + b.value
    rows = x.value.size // p
    x_value, w_value = x.value, W.value

    def backward_fn(g, wanted):
        g2 = g.reshape(-1, q)
        gx = g @ w_value.T if wanted[0] else None
        gw = x_value.reshape(-1, p).T @ g2 if wanted[1] else None
        if b is None:
            return gx, gw
        gb = g2.sum(axis=0) if wanted[2] else None
        return gx, gw, gb

    parents = (x, W) if b is None else (x, W, b)
    return make_op(out, "linear", parents, backward_fn, flops=2 * rows * p * q)


def matmul(a: Node, b: Node) -> Node:
    """Batched product of two node matrices with identical leading axes."""
    if a.value.ndim != b.value.ndim or a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    a_value, b_value = a.value, b.value
    out = a_value @ b_value
    batch = int(np.prod(a.shape[:-2], dtype=np.int64))
    n, p = a.shape[-2:]
    q = b.shape[-1]

    def backward_fn(g, wanted):
        ga = g @ _swap_last(b_value) if wanted[0] else None
        gb = _swap_last(a_value) @ g if wanted[1] else None
        return ga, gb

    return make_op(out, "matmul", (a, b), backward_fn, flops=2 * batch * n * p * q)


# ---------------------------------------------------------------------------
# Element-wise
# ---------------------------------------------------------------------------

def add(a: Node, b: Node) -> Node:
    _require_same_shape("add", a, b)
    return make_op(a.value + b.value, "add", (a, b), lambda g, wanted: (g, g))


def subtract(a: Node, b: Node) -> Node:
    _require_same_shape("subtract", a, b)
    return make_op(a.value - b.value, "subtract", (a, b), lambda g, wanted: (g, -g))


def scale(x: Node, factor: float) -> Node:
    factor = x.value.dtype.type(factor)
    return make_op(x.value * factor, "scale", (x,), lambda g, wanted: (g * factor,))


def mask_multiply(x: Node, mask: np.ndarray) -> Node:
    """x ⊙ mask for a constant mask (dropout)."""
    mask = np.asarray(mask, dtype=x.value.dtype)
    if mask.shape != x.shape:
        raise DimensionError(f"mask_multiply: mask {mask.shape} vs x {x.shape}")
    return make_op(x.value * mask, "mask", (x,), lambda g, wanted: (g * mask,))


def leaky_rectifier(x: Node, slope: float = LEAKY_SLOPE) -> Node:
    positive = x.value > 0
    slope = x.value.dtype.type(slope)
    out = np.where(positive, x.value, slope * x.value)
    return make_op(out, "leaky", (x,), lambda g, wanted: (np.where(positive, g, slope * g),))


def row_softmax(x: Node) -> Node:
    shifted = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(g, wanted):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return make_op(y, "softmax", (x,), backward_fn)


def layer_norm(x: Node, gamma: Node, beta: Node, eps: float = LAYER_NORM_EPS) -> Node:
    """Normalise every row over the feature axis, then γ·x̂ + β."""
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm: gamma/beta must be ({d},)")
    mu = x.value.mean(axis=-1, keepdims=True)
    var = x.value.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.value - mu) * inv_std
    out = xhat * gamma.value + beta.value
    gamma_value = gamma.value

    def backward_fn(g, wanted):
        gx = None
        if wanted[0]:
            gh = g * gamma_value
            gx = inv_std * (
                gh
                - gh.mean(axis=-1, keepdims=True)
                - xhat * (gh * xhat).mean(axis=-1, keepdims=True)
            )
        g2 = g.reshape(-1, d)
        ggamma = (g2 * xhat.reshape(-1, d)).sum(axis=0) if wanted[1] else None
        gbeta = g2.sum(axis=0) if wanted[2] else None
        return gx, ggamma, gbeta

    return make_op(out.astype(x.value.dtype, copy=False), "layer_norm", (x, gamma, beta), backward_fn)


# ---------------------------------------------------------------------------
# Pooling / indexing / shape
# ---------------------------------------------------------------------------

def row_max_pool(x: Node) -> Node:
    """Column-wise max over the rows of each matrix: (..., r, c) → (..., c)."""
    arg = np.argmax(x.value, axis=-2)
    out = np.take_along_axis(x.value, arg[..., None, :], axis=-2)[..., 0, :]
    shape = x.shape

    def backward_fn(g, wanted):
        gx = np.zeros(shape, dtype=g.dtype)
        np.put_along_axis(gx, arg[..., None, :], g[..., None, :], axis=-2)
        return (gx,)

    return make_op(out, "max_pool", (x,), backward_fn)


def row_mean_pool(x: Node) -> Node:
    rows = x.shape[-2]
    out = x.value.mean(axis=-2)
    shape = x.shape

    def backward_fn(g, wanted):
        return (np.broadcast_to(g[..., None, :] / rows, shape).astype(g.dtype),)

    return make_op(out, "mean_pool", (x,), backward_fn)


def gather_rows(x: Node, indices: np.ndarray) -> Node:
    """
    Row lookup per matrix: x (B, n, c) with indices (B, m) → (B, m, c);
    a single matrix (n, c) takes indices (m,). Indices are constants.
    """
    indices = np.asarray(indices)
    single = x.value.ndim == 2
    xv = x.value[None] if single else x.value
    idx = indices[None] if single else indices
    if xv.ndim != 3 or idx.ndim != 2 or idx.shape[0] != xv.shape[0]:
        raise DimensionError(f"gather_rows: x {x.shape} incompatible with indices {indices.shape}")
    batch, n, c = xv.shape
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexRangeError(f"gather_rows: index outside [0, {n})")

    flat = (idx + (np.arange(batch) * n)[:, None]).ravel()
    out = xv.reshape(batch * n, c)[flat].reshape(batch, idx.shape[1], c)

    def backward_fn(g, wanted):
        gx = np.zeros((batch * n, c), dtype=g.dtype)
        np.add.at(gx, flat, g.reshape(-1, c))
        gx = gx.reshape(batch, n, c)
        return (gx[0] if single else gx,)

    return make_op(out[0] if single else out, "gather", (x,), backward_fn)


def concat_cols(a: Node, b: Node) -> Node:
    if a.shape[:-1] != b.shape[:-1]:
        raise DimensionError(f"concat_cols: {a.shape} vs {b.shape}")
    split = a.shape[-1]
    out = np.concatenate([a.value, b.value], axis=-1)
    return make_op(out, "concat", (a, b), lambda g, wanted: (g[..., :split], g[..., split:]))


def reshape(x: Node, shape: tuple) -> Node:
    original = x.shape
    return make_op(x.value.reshape(shape), "reshape", (x,), lambda g, wanted: (g.reshape(original),))


def transpose(x: Node, axes: tuple) -> Node:
    inverse = tuple(np.argsort(axes))
    return make_op(np.transpose(x.value, axes), "transpose", (x,), lambda g, wanted: (np.transpose(g, inverse),))


def sum_all(x: Node) -> Node:
    shape = x.shape
    return make_op(x.value.sum(), "sum", (x,), lambda g, wanted: (np.broadcast_to(g, shape).copy(),))
