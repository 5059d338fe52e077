"""Generative delayed-feedback baseline.

Two linear models share the feature space: one scores the conversion
probability through a sigmoid, the other scores a log-hazard whose
exponential is the rate of an exponential delay distribution (per hour).
A row that is still negative at the snapshot is explained as either a true
negative or a converter whose delay has not elapsed yet, and the joint
likelihood marginalizes the two. Only the conversion side is used for
prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import backend
from .optim import (
    DIVERGENCE_GUARD,
    DivergedError,
    TrainConfig,
    TrainResult,
    write_weight_lines,
)

__all__ = ["DfmModel", "dfm_nll", "grad_nll", "train_dfm", "save_model", "load_model"]


@dataclass
class DfmModel:
    """Conversion weights plus delay-hazard weights over one feature space."""

    cvr_weights: np.ndarray
    hazard_weights: np.ndarray

    def __post_init__(self):
        cvr = np.ascontiguousarray(self.cvr_weights, dtype=np.float64)
        hazard = np.ascontiguousarray(self.hazard_weights, dtype=np.float64)
        if cvr.shape != hazard.shape or cvr.ndim != 1 or cvr.size == 0:
            raise ValueError("both weight vectors must share one non-empty dimension")
        if not (np.all(np.isfinite(cvr)) and np.all(np.isfinite(hazard))):
            raise ValueError("weights must be finite")
        self.cvr_weights = cvr
        self.hazard_weights = hazard

    @classmethod
    def zeros(cls, dimension: int) -> "DfmModel":
        return cls(np.zeros(int(dimension)), np.zeros(int(dimension)))

    @property
    def dimension(self) -> int:
        return self.cvr_weights.size

    def scores(self, features) -> np.ndarray:
        return features.scores(self.cvr_weights)

    def probabilities(self, features) -> np.ndarray:
        return expit(self.scores(features))

    def hazard(self, features) -> np.ndarray:
        """Exponential delay rate per hour, always positive."""
        return np.exp(features.scores(self.hazard_weights))


def _nll_terms(cvr_weights, hazard_weights, biased):
    """Mean negative log likelihood and per-row gradient coefficients."""
    features = biased.features
    s = features.scores(cvr_weights)
    h = features.scores(hazard_weights)
    n = len(biased)
    pos = biased.temporal_label == 1
    delay = biased.observed_delay
    if pos.any() and not np.all(np.isfinite(delay[pos])):
        raise ValueError("a positive row is missing its observed delay")
    coef_cvr = np.empty(n)
    coef_hazard = np.empty(n)
    value = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        rate = np.exp(h)
        if pos.any():
            # -log sigma(s) - h + rate * delay
            ll = -np.logaddexp(0.0, -s[pos]) + h[pos] - rate[pos] * delay[pos]
            value -= float(ll.sum())
            coef_cvr[pos] = expit(s[pos]) - 1.0
            coef_hazard[pos] = rate[pos] * delay[pos] - 1.0
        neg = ~pos
        if neg.any():
            # log( (1 - sigma(s)) + sigma(s) * exp(-rate * elapsed) )
            log_never = -np.logaddexp(0.0, s[neg])
            log_pending = -np.logaddexp(0.0, -s[neg]) - rate[neg] * biased.elapsed[neg]
            log_marginal = np.logaddexp(log_never, log_pending)
            value -= float(log_marginal.sum())
            w_pending = np.exp(log_pending - log_marginal)
            w_never = np.exp(log_never - log_marginal)
            p = expit(s[neg])
            coef_cvr[neg] = w_never * p - w_pending * (1.0 - p)
            coef_hazard[neg] = w_pending * rate[neg] * biased.elapsed[neg]
    return value / n, coef_cvr / n, coef_hazard / n


def dfm_nll(model: DfmModel, biased) -> float:
    """Mean negative log likelihood of the snapshot observations.

    Can be negative: the delay density exceeds one when the rate is high
    and the observed delay short.
    """
    if len(biased) == 0:
        raise ValueError("the biased dataset is empty")
    value, _, _ = _nll_terms(model.cvr_weights, model.hazard_weights, biased)
    return value


def grad_nll(model: DfmModel, biased) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the mean negative log likelihood for both weight blocks."""
    if len(biased) == 0:
        raise ValueError("the biased dataset is empty")
    _, coef_cvr, coef_hazard = _nll_terms(model.cvr_weights, model.hazard_weights, biased)
    features = biased.features
    grad_cvr = backend.scatter_rows(features.indices, features.indptr, coef_cvr, features.dimension)
    grad_hazard = backend.scatter_rows(
        features.indices, features.indptr, coef_hazard, features.dimension
    )
    return grad_cvr, grad_hazard


def train_dfm(biased, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Joint gradient descent on the conversion and hazard weights."""
    if len(biased) == 0:
        raise ValueError("the biased dataset is empty")
    features = biased.features
    dim = features.dimension
    w_cvr = np.zeros(dim)
    w_hazard = np.zeros(dim)
    rng = np.random.default_rng(config.seed)
    lam = config.l2_lambda
    trace: list[float] = []
    converged = False
    n = len(biased)
    use_batches = config.batch_size is not None and config.batch_size < n
    if use_batches:
        n_batches = -(-n // config.batch_size)

    def full_eval(wc, wh):
        value, coef_cvr, coef_hazard = _nll_terms(wc, wh, biased)
        grad_cvr = backend.scatter_rows(features.indices, features.indptr, coef_cvr, dim)
        grad_hazard = backend.scatter_rows(features.indices, features.indptr, coef_hazard, dim)
        return value, grad_cvr, grad_hazard

    for epoch in range(config.max_epochs):
        if use_batches:
            for chunk in np.array_split(rng.permutation(n), n_batches):
                batch = biased.subset(chunk)
                _, coef_cvr, coef_hazard = _nll_terms(w_cvr, w_hazard, batch)
                sub = batch.features
                grad_cvr = backend.scatter_rows(sub.indices, sub.indptr, coef_cvr, dim)
                grad_hazard = backend.scatter_rows(sub.indices, sub.indptr, coef_hazard, dim)
                if lam:
                    grad_cvr += (2.0 * lam / dim) * w_cvr
                    grad_hazard += (2.0 * lam / dim) * w_hazard
                w_cvr -= config.learning_rate * grad_cvr
                w_hazard -= config.learning_rate * grad_hazard
        value, grad_cvr, grad_hazard = full_eval(w_cvr, w_hazard)
        objective = value
        if lam:
            objective += lam * (float(w_cvr @ w_cvr) + float(w_hazard @ w_hazard)) / dim
        if not np.isfinite(objective) or abs(objective) > DIVERGENCE_GUARD:
            raise DivergedError("dfm", epoch, objective)
        trace.append(objective)
        if lam:
            grad_cvr = grad_cvr + (2.0 * lam / dim) * w_cvr
            grad_hazard = grad_hazard + (2.0 * lam / dim) * w_hazard
        grad_norm = max(float(np.max(np.abs(grad_cvr))), float(np.max(np.abs(grad_hazard))))
        if grad_norm < config.grad_tolerance:
            converged = True
            break
        if not use_batches:
            w_cvr -= config.learning_rate * grad_cvr
            w_hazard -= config.learning_rate * grad_hazard

    return TrainResult(model=DfmModel(w_cvr, w_hazard), method="dfm",
                       objective_trace=trace, converged=converged)


def save_model(path, model: DfmModel) -> None:
    """Two-section text format sharing the linear-model line layout."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("method\tdfm\n")
        fh.write(f"dimension\t{model.dimension}\n")
        fh.write("section\tcvr\n")
        write_weight_lines(fh, model.cvr_weights)
        fh.write("section\thazard\n")
        write_weight_lines(fh, model.hazard_weights)


def load_model(path) -> DfmModel:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = dict(line.split("\t", 1) for line in lines[:2])
    if header.get("method") != "dfm" or "dimension" not in header:
        raise ValueError(f"{path}: not a dfm model file")
    dimension = int(header["dimension"])
    blocks = {"cvr": np.zeros(dimension), "hazard": np.zeros(dimension)}
    current = None
    for line in lines[2:]:
        if not line:
            continue
        key, _, value = line.partition("\t")
        if key == "section":
            if value not in blocks:
                raise ValueError(f"{path}: unknown section {value!r}")
            current = blocks[value]
        else:
            if current is None:
                raise ValueError(f"{path}: weight line before any section")
            current[int(key)] = float(value)
    return DfmModel(blocks["cvr"], blocks["hazard"])
