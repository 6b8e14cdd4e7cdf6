"""
training/loss.py
Mean cross-entropy over a batch of logits, fused with a max-shifted
log-softmax for stability.
"""

import numpy as np

from errors import LabelError
from numerics.autodiff import Node, make_op


def cross_entropy(logits: Node, labels) -> Node:
    """−log softmax(logits)[label], averaged over the batch; logits (B, C) or (C,)."""
    values = logits.value if logits.value.ndim == 2 else logits.value[None]
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    batch, classes = values.shape
    if labels.shape != (batch,):
        raise LabelError(f"expected {batch} label(s), got {labels.shape}")
    if labels.min() < 0 or labels.max() >= classes:
        raise LabelError(f"label outside [0, {classes})")

    shifted = values - values.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(batch)
    loss = -log_probs[rows, labels].mean()
    shape = logits.shape

    def backward_fn(g, wanted):
        grad = np.exp(log_probs)
        grad[rows, labels] -= 1.0
        return ((grad * (g / batch)).reshape(shape),)

    return make_op(np.asarray(loss, dtype=values.dtype), "cross_entropy", (logits,), backward_fn)
