"""The two training losses: softmax cross-entropy and the additive L2 cost."""
from __future__ import annotations

import numpy as np

from .tensor import ShapeError

_PROB_FLOOR = 1e-300


def cross_entropy_loss(probs, label: int):
    """Negative log-likelihood of softmax probabilities for one sample.

    Returns (loss, gradient with respect to the *logits*): the softmax and the
    cross-entropy collapse to probs - one_hot(label).
    """
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < p.shape[-1]:
        raise IndexError(f"label {label} out of range for {p.shape[-1]} classes")
    loss = -np.log(max(float(p[label]), _PROB_FLOOR))
    grad = p.copy()
    grad[label] -= 1.0
    return loss, grad


def cross_entropy_batch(probs: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over a batch; gradient is w.r.t. the logits."""
    n = probs.shape[0]
    picked = np.clip(probs[np.arange(n), labels], _PROB_FLOOR, None)
    loss = float(-np.log(picked).mean())
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def additive_l2_loss(pred, target):
    """Summed squared error across the steering and throttle outputs."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"pred {p.shape} != target {t.shape}")
    diff = p - t
    return float(np.sum(diff * diff)), 2.0 * diff


def additive_l2_batch(pred: np.ndarray, target: np.ndarray):
    """Mean additive-L2 over a batch of (steering, throttle) pairs."""
    diff = pred - target
    n = pred.shape[0]
    return float(np.sum(diff * diff) / n), 2.0 * diff / n
