"""Loss functions and the empirical risk estimators.

All training risks use the logistic surrogate. The corrected risk adds a
composite-loss term over oracle rows identified as late converters; with a
linear model the composite term is linear in the score, so the corrected
risk stays convex. Its non-negative variant clamps the negative risk
component at zero, which keeps flexible models from driving the estimate to
minus infinity at the cost of a small upward bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "LossKind",
    "logistic_loss",
    "composite_loss",
    "zero_one_loss",
    "RiskParts",
    "risk_bl",
    "risk_tw",
    "risk_parts",
    "risk_convdf",
    "risk_nndf",
    "risk_putw",
    "risk_pnutw",
    "risk_fsiw",
    "oracle_risk",
]


class LossKind(Enum):
    """Available losses; the zero-one loss is for evaluation only."""

    LOGISTIC = "logistic"
    ZERO_ONE = "zero_one"


def logistic_loss(z):
    """log(1 + exp(-z)), overflow-safe, elementwise."""
    return np.logaddexp(0.0, np.negative(z))


def composite_loss(z):
    """logistic_loss(z) - logistic_loss(-z); equals -z for the logistic
    surrogate, which is what keeps the corrected risk convex."""
    z = np.asarray(z, dtype=np.float64)
    return np.logaddexp(0.0, -z) - np.logaddexp(0.0, z)


def zero_one_loss(z):
    """1 where z > 0 else 0, with the tie at 0 counting as 1."""
    return np.where(np.asarray(z, dtype=np.float64) >= 0, 1.0, 0.0)


def _weights_of(model) -> np.ndarray:
    weights = np.asarray(getattr(model, "weights", model), dtype=np.float64)
    if weights.ndim != 1:
        raise ValueError("model weights must be a vector")
    return weights


def _require_rows(dataset, name: str):
    if len(dataset) == 0:
        raise ValueError(f"the {name} dataset is empty")


def late_converters(oracle) -> np.ndarray:
    """Mask of oracle rows that are true positives with a wrong earlier label."""
    return (oracle.snapshot_correct == -1) & (oracle.class_label == 1)


def risk_bl(model, biased) -> float:
    """Mean logistic loss of the snapshot labels (the uncorrected risk)."""
    _require_rows(biased, "biased")
    s = biased.features.scores(_weights_of(model))
    return float(np.mean(np.logaddexp(0.0, -biased.temporal_label * s)))


def risk_tw(model, oracle) -> float:
    """Mean logistic loss of the oracle classes (deadline-matured rows only)."""
    _require_rows(oracle, "oracle")
    s = oracle.features.scores(_weights_of(model))
    return float(np.mean(np.logaddexp(0.0, -oracle.class_label * s)))


@dataclass(frozen=True)
class RiskParts:
    """Positive and negative components of the corrected risk.

    The corrected risk recomposes as pos_biased + pos_oracle + neg_biased -
    neg_oracle; every component is a mean of non-negative losses.
    """

    pos_biased: float
    pos_oracle: float
    neg_biased: float
    neg_oracle: float

    @property
    def convdf_total(self) -> float:
        return self.pos_biased + self.pos_oracle + self.neg_biased - self.neg_oracle

    @property
    def nndf_total(self) -> float:
        return self.pos_biased + self.pos_oracle + max(self.neg_biased - self.neg_oracle, 0.0)


def risk_parts(model, biased, oracle) -> RiskParts:
    """Decompose the corrected risk into its four components."""
    _require_rows(biased, "biased")
    _require_rows(oracle, "oracle")
    w = _weights_of(model)
    s_b = biased.features.scores(w)
    s_o = oracle.features.scores(w)
    pos = biased.temporal_label == 1
    late = late_converters(oracle)
    n, m = len(biased), len(oracle)
    return RiskParts(
        pos_biased=float(np.logaddexp(0.0, -s_b[pos]).sum()) / n,
        pos_oracle=float(np.logaddexp(0.0, -s_o[late]).sum()) / m,
        neg_biased=float(np.logaddexp(0.0, s_b[~pos]).sum()) / n,
        neg_oracle=float(np.logaddexp(0.0, s_o[late]).sum()) / m,
    )


def risk_convdf(model, biased, oracle) -> float:
    """Corrected risk: the biased logistic risk plus the composite-loss
    term over late-converting oracle rows. Can be negative."""
    _require_rows(biased, "biased")
    _require_rows(oracle, "oracle")
    w = _weights_of(model)
    s_b = biased.features.scores(w)
    s_o = oracle.features.scores(w)
    base = float(np.mean(np.logaddexp(0.0, -biased.temporal_label * s_b)))
    correction = float(np.sum(composite_loss(s_o[late_converters(oracle)]))) / len(oracle)
    return base + correction


def risk_nndf(model, biased, oracle) -> float:
    """Corrected risk with the negative component clamped at zero.

    Algebraically pos + max(neg_difference, 0) = max(corrected, pos), and
    the max form guarantees the clamped risk never falls below the
    corrected one even at floating-point resolution.
    """
    parts = risk_parts(model, biased, oracle)
    return max(risk_convdf(model, biased, oracle), parts.pos_biased + parts.pos_oracle)


def risk_putw(model, biased, oracle) -> float:
    """Positive-unlabeled risk: oracle positives act as labeled positives,
    the whole biased set as unlabeled."""
    _require_rows(biased, "biased")
    _require_rows(oracle, "oracle")
    w = _weights_of(model)
    s_b = biased.features.scores(w)
    s_o = oracle.features.scores(w)
    cpos = oracle.class_label == 1
    m = len(oracle)
    positive = float(np.logaddexp(0.0, -s_o[cpos]).sum()) / m
    positive_as_negative = float(np.logaddexp(0.0, s_o[cpos]).sum()) / m
    unlabeled = float(np.mean(np.logaddexp(0.0, s_b)))
    return positive - positive_as_negative + unlabeled


def risk_pnutw(model, biased, oracle, omega: float) -> float:
    """Convex mix of the positive-unlabeled and oracle-class risks."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    return omega * risk_putw(model, biased, oracle) + (1.0 - omega) * risk_tw(model, oracle)


def risk_fsiw(model, biased, weights) -> float:
    """Importance-weighted biased risk; one non-negative weight per row."""
    _require_rows(biased, "biased")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(biased),):
        raise ValueError("exactly one weight per biased row is required")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("weights must be finite and non-negative")
    s = biased.features.scores(_weights_of(model))
    return float(np.mean(np.logaddexp(0.0, -biased.temporal_label * s) * weights))


def oracle_risk(model, features, true_labels) -> float:
    """Mean logistic loss against true class labels (the ideal reference)."""
    true_labels = np.asarray(true_labels)
    if len(features) == 0:
        raise ValueError("the labeled dataset is empty")
    if true_labels.shape != (len(features),):
        raise ValueError("exactly one label per row is required")
    s = features.scores(_weights_of(model))
    return float(np.mean(np.logaddexp(0.0, -true_labels * s)))
