"""Supervised loss and weight regularizers."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from setnet.consts import RegularizerKind
from setnet.errors import ShapeMismatchError

ROW_SUM_TOL = 1e-6


def cross_entropy_loss(probabilities: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean negative log-likelihood of one-hot labels under row-normalized probabilities.

    Returns:
        loss: mean over rows
        grad: (p - y) / batch, the gradient wrt the softmax pre-activation
    """
    if probabilities.shape != labels.shape:
        raise ShapeMismatchError(
            f"probabilities {probabilities.shape} and labels {labels.shape} differ"
        )
    row_sums = probabilities.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
        worst = int(np.argmax(np.abs(row_sums - 1.0)))
        raise ValueError(f"Row {worst} of probabilities sums to {row_sums[worst]!r}, not 1")
    batch = probabilities.shape[0]
    tiny = np.finfo(np.float64).tiny
    log_p = np.log(np.clip(probabilities, tiny, None))
    loss = -float(np.sum(labels * log_p)) / batch
    grad = (probabilities - labels) / batch
    return loss, grad


def accuracy(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax matches. labels may be one-hot or class indices."""
    target = labels.argmax(axis=1) if labels.ndim == 2 else labels
    return float(np.mean(probabilities.argmax(axis=1) == target))


def regularizer_gradient(kind: str, rate: float, weights: np.ndarray) -> np.ndarray:
    """l1: rate * sign(w), l2: rate * w, none: zeros. sign(0) is 0."""
    RegularizerKind.check(kind, "regularizer")
    if rate < 0:
        raise ValueError(f"regularizer rate must be >= 0 but is {rate!r}")
    if kind == RegularizerKind.L1:
        return rate * np.sign(weights)
    if kind == RegularizerKind.L2:
        return rate * weights
    return np.zeros_like(weights, dtype=np.float64)
