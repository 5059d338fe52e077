"""Evaluation metrics against true class labels."""

from __future__ import annotations

import numpy as np

__all__ = ["PROBABILITY_CLIP", "metric_nll", "metric_acc", "metric_auc_pr", "metric_rll"]

PROBABILITY_CLIP = 1e-12


def _checked(predictions, labels):
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError("predictions and labels must be equal-length vectors")
    return p, y


def metric_nll(probabilities, labels) -> float:
    """Mean negative log likelihood of true labels (+1 / -1) under predicted
    conversion probabilities, clipped away from 0 and 1."""
    p, y = _checked(probabilities, labels)
    p = np.clip(p, PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP)
    return float(-np.mean(np.where(y == 1, np.log(p), np.log1p(-p))))


def metric_acc(probabilities, labels) -> float:
    """Fraction classified correctly at threshold 0.5; the tie counts as +1."""
    p, y = _checked(probabilities, labels)
    predicted = np.where(p >= 0.5, 1, -1)
    return float(np.mean(predicted == y))


def metric_auc_pr(scores, labels) -> float:
    """Area under the precision-recall curve, average-precision style.

    Sweeps thresholds downward through the distinct scores (ties grouped)
    and sums precision times recall increment. Undefined without at least
    one positive label.
    """
    s, y = _checked(scores, labels)
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise ValueError("AUC-PR is undefined without positive labels")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    hits = (y[order] == 1).astype(np.int64)
    group_end = np.empty(s_sorted.size, dtype=bool)
    group_end[:-1] = s_sorted[:-1] != s_sorted[1:]
    group_end[-1] = True
    true_positives = np.cumsum(hits)[group_end]
    predicted_positives = np.flatnonzero(group_end) + 1
    precision = true_positives / predicted_positives
    recall = true_positives / n_pos
    return float(np.sum(np.diff(recall, prepend=0.0) * precision))


def metric_rll(nll_method: float, nll_oracle: float) -> float:
    """Log loss relative to the ideal reference; negative means better."""
    if not nll_oracle > 0:
        raise ValueError("the reference log loss must be positive")
    return (nll_method - nll_oracle) / nll_oracle
