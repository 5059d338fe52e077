"""Two-step importance-weight estimation for the reweighted baseline.

Two auxiliary logistic models are fitted on the oracle dataset, both over
the feature space augmented with one trailing normalized-elapsed column:

* the flip-timing model predicts, among true positives, whether the label
  had already flipped one deadline before the snapshot;
* the hidden-positive model predicts, among rows still negative at that
  earlier point, whether they are true positives.

Their probabilities give each biased-dataset row an importance weight:
positive rows are re-inflated by the inverse flip probability (floored to
bound the weights), negative rows are down-weighted by the estimated
hidden-positive share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import backend
from .optim import DIVERGENCE_GUARD, DivergedError, LinearModel, TrainConfig

__all__ = ["PROBABILITY_FLOOR", "FsiwWeights", "fit_weight_models", "weights_for"]

# Floor on the flip probability; caps positive-row weights at 1 / floor.
PROBABILITY_FLOOR = 1e-3


@dataclass
class FsiwWeights:
    """Fitted auxiliary models plus the elapsed normalization scale."""

    pos_model: LinearModel
    neg_model: LinearModel
    elapsed_scale: float


def _augmented_scores(model: LinearModel, features, normalized_elapsed) -> np.ndarray:
    if model.dimension != features.dimension + 1:
        raise ValueError("auxiliary model does not match the feature space")
    return features.scores(model.weights[:-1]) + model.weights[-1] * normalized_elapsed


def _fit_augmented_logistic(features, normalized_elapsed, targets, config: TrainConfig,
                            label: str) -> LinearModel:
    """Full-batch logistic regression on features plus one dense column."""
    dim = features.dimension + 1
    n = len(features)
    labels = np.where(targets, 1.0, -1.0)
    positive = labels == 1.0
    w = np.zeros(dim)
    for epoch in range(config.max_epochs):
        s = features.scores(w[:-1]) + w[-1] * normalized_elapsed
        value = float(np.logaddexp(0.0, -labels * s).sum()) / n
        objective = value + config.l2_lambda * float(w @ w) / dim
        if not np.isfinite(objective) or abs(objective) > DIVERGENCE_GUARD:
            raise DivergedError(label, epoch, objective)
        coefficients = (expit(s) - positive) / n
        grad = np.empty(dim)
        grad[:-1] = backend.scatter_rows(
            features.indices, features.indptr, coefficients, features.dimension
        )
        grad[-1] = float(coefficients @ normalized_elapsed)
        grad += (2.0 * config.l2_lambda / dim) * w
        if float(np.max(np.abs(grad))) < config.grad_tolerance:
            break
        w -= config.learning_rate * grad
    return LinearModel(w)


def fit_weight_models(oracle, config: TrainConfig = TrainConfig(),
                      elapsed_scale: float | None = None) -> FsiwWeights:
    """Fit both auxiliary models on the oracle dataset.

    ``elapsed_scale`` normalizes the elapsed column; pass the shifted
    window length (snapshot time minus deadline) when known, otherwise the
    largest observed elapsed is used. Fits are full-batch.
    """
    if len(oracle) == 0:
        raise ValueError("the oracle dataset is empty")
    pos_rows = oracle.class_label == 1
    # rows whose label at the shifted snapshot was still negative
    neg_rows = (oracle.class_label == -1) | (oracle.snapshot_correct == -1)
    if not pos_rows.any():
        raise ValueError("no true-positive oracle rows to fit the flip-timing model")
    if not neg_rows.any():
        raise ValueError("no shifted-snapshot-negative oracle rows to fit the hidden-positive model")
    if elapsed_scale is None:
        elapsed_scale = float(oracle.elapsed_at_shifted_snapshot.max())
    if elapsed_scale <= 0:
        elapsed_scale = 1.0
    normalized = oracle.elapsed_at_shifted_snapshot / elapsed_scale
    pos_model = _fit_augmented_logistic(
        oracle.features.take(pos_rows),
        normalized[pos_rows],
        oracle.snapshot_correct[pos_rows] == 1,
        config,
        "fsiw-flip-model",
    )
    neg_model = _fit_augmented_logistic(
        oracle.features.take(neg_rows),
        normalized[neg_rows],
        oracle.class_label[neg_rows] == 1,
        config,
        "fsiw-hidden-positive-model",
    )
    return FsiwWeights(pos_model, neg_model, float(elapsed_scale))


def weights_for(biased, weights: FsiwWeights) -> np.ndarray:
    """Per-row importance weights for the biased dataset.

    Elapsed times are clipped to the scale the models were fitted on
    before featurization. Positive rows get 1 / max(flip probability,
    floor); negative rows get clip(1 - hidden-positive probability, 0, 1).
    """
    normalized = np.clip(biased.elapsed, 0.0, weights.elapsed_scale) / weights.elapsed_scale
    result = np.empty(len(biased))
    pos = biased.temporal_label == 1
    if pos.any():
        p_flip = expit(
            _augmented_scores(weights.pos_model, biased.features.take(pos), normalized[pos])
        )
        result[pos] = 1.0 / np.maximum(p_flip, PROBABILITY_FLOOR)
    neg = ~pos
    if neg.any():
        p_hidden = expit(
            _augmented_scores(weights.neg_model, biased.features.take(neg), normalized[neg])
        )
        result[neg] = np.clip(1.0 - p_hidden, 0.0, 1.0)
    return result
