"""Softmax cross-entropy, computed in float64 regardless of storage dtype."""

from __future__ import annotations

import numpy as np


def softmax(logits):
    """Row-wise softmax; rows sum to 1 within float64 rounding."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_labels(logits, labels):
    labels = np.asarray(labels)
    if logits.shape[0] != labels.shape[0]:
        raise ValueError(
            f"logit rows ({logits.shape[0]}) != label count ({labels.shape[0]})"
        )
    num_classes = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(
            f"labels must lie in [0, {num_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    return labels


def cross_entropy_loss(logits, labels) -> float:
    """Mean over the batch of -log softmax(logits)[label]."""
    logits = np.asarray(logits)
    labels = _check_labels(logits, labels)
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(len(labels)), labels]))


def cross_entropy_grad(logits, labels):
    """d(mean loss)/d(logits), returned in the logits' dtype."""
    logits = np.asarray(logits)
    labels = _check_labels(logits, labels)
    p = softmax(logits)
    p[np.arange(len(labels)), labels] -= 1.0
    return (p / len(labels)).astype(logits.dtype)
