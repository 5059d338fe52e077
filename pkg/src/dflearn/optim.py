"""Gradient-descent training for every linear-model method.

One loop serves all methods: full-batch by default, optionally mini-batch
with the non-negative branch re-evaluated per batch. Training starts from
zero weights, stops on an epoch cap or a gradient-norm tolerance, and
aborts with :class:`DivergedError` when the objective leaves the bounded
region (the uncorrected-risk term of the corrected estimator is unbounded
below on separable data, so this is a real exit path, not paranoia).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import backend, risk

__all__ = [
    "METHODS",
    "DIVERGENCE_GUARD",
    "LinearModel",
    "TrainConfig",
    "TrainData",
    "TrainResult",
    "DivergedError",
    "l2_penalty",
    "grad_convdf",
    "grad_nndf",
    "grad_fsiw",
    "risk_and_gradient",
    "train",
    "select_lambda",
    "log_uniform_candidates",
    "CRITEO_LAMBDA_GRID",
    "save_model",
    "load_model",
    "read_model_method",
]

METHODS = ("convdf", "nndf", "bl", "tw", "putw", "pnutw", "fsiw", "dfm", "oracle")

NN_MODES = ("plain", "ascent")

DIVERGENCE_GUARD = 1e6

CRITEO_LAMBDA_GRID = (0.1, 0.05, 0.01, 0.005)


@dataclass
class LinearModel:
    """Dense weight vector over the sparse binary feature space.

    The bias weight sits at the last coordinate, mirroring the reserved
    bias column of the feature rows.
    """

    weights: np.ndarray

    def __post_init__(self):
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        self.weights = weights

    @classmethod
    def zeros(cls, dimension: int) -> "LinearModel":
        return cls(np.zeros(int(dimension)))

    @property
    def dimension(self) -> int:
        return self.weights.size

    def scores(self, features) -> np.ndarray:
        return features.scores(self.weights)

    def probabilities(self, features) -> np.ndarray:
        return expit(self.scores(features))


@dataclass(frozen=True)
class TrainConfig:
    """Shared gradient-descent settings.

    ``batch_size=None`` means full batch. ``nn_mode`` selects what the
    non-negative branch does while the clamp is active: step on the
    positive part only ("plain") or ascend the negative part ("ascent").
    """

    learning_rate: float = 0.5
    l2_lambda: float = 0.0
    max_epochs: int = 2000
    grad_tolerance: float = 1e-6
    batch_size: int | None = None
    nn_mode: str = "plain"
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.grad_tolerance < 0:
            raise ValueError("grad_tolerance must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be at least 1 (or None for full batch)")
        if self.nn_mode not in NN_MODES:
            raise ValueError(f"nn_mode must be one of {NN_MODES}")


@dataclass
class TrainData:
    """The inputs a training method may need.

    ``labeled_features``/``labeled_classes`` carry a ground-truth labeled
    set for the ideal-reference method. ``fsiw_weights`` must align with
    the biased rows. ``omega`` is the positive-unlabeled mixing weight.
    """

    biased: object | None = None
    oracle: object | None = None
    fsiw_weights: np.ndarray | None = None
    labeled_features: object | None = None
    labeled_classes: np.ndarray | None = None
    omega: float = 0.5


@dataclass
class TrainResult:
    """A fitted model plus its per-epoch regularized-objective trace."""

    model: object
    method: str
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def n_epochs(self) -> int:
        return len(self.objective_trace)


class DivergedError(RuntimeError):
    """The training objective left the finite / bounded region."""

    def __init__(self, method: str, epoch: int, objective: float):
        super().__init__(f"{method} diverged at epoch {epoch}: objective {objective!r}")
        self.method = method
        self.epoch = epoch
        self.objective = objective


def _weights_of(model) -> np.ndarray:
    return np.ascontiguousarray(getattr(model, "weights", model), dtype=np.float64)


def l2_penalty(model) -> tuple[float, np.ndarray]:
    """Mean squared weight size and its gradient; the bias is penalized too."""
    weights = _weights_of(model)
    d = weights.size
    return float(weights @ weights) / d, (2.0 / d) * weights


def _scatter(dataset, coefficients, out=None):
    features = dataset.features
    return backend.scatter_rows(
        features.indices, features.indptr, coefficients, features.dimension, out
    )


def _logistic_value_grad(w, features, labels):
    s = features.scores(w)
    n = labels.size
    value = float(np.logaddexp(0.0, -labels * s).sum()) / n
    coefficients = (expit(s) - (labels == 1)) / n
    grad = backend.scatter_rows(features.indices, features.indptr, coefficients, features.dimension)
    return value, grad


def _corrected_value_grad(w, biased, oracle, nn_mode):
    """Value and gradient of the corrected risk (clamped when ``nn_mode``
    is set). Returns (value, grad, clamp_active)."""
    s_b = biased.features.scores(w)
    y_pos = biased.temporal_label == 1
    n = len(biased)
    pos_biased = float(np.logaddexp(0.0, -s_b[y_pos]).sum()) / n
    neg_biased = float(np.logaddexp(0.0, s_b[~y_pos]).sum()) / n
    m = len(oracle) if oracle is not None else 0
    if m:
        s_o = oracle.features.scores(w)
        late = risk.late_converters(oracle)
        pos_oracle = float(np.logaddexp(0.0, -s_o[late]).sum()) / m
        neg_oracle = float(np.logaddexp(0.0, s_o[late]).sum()) / m
    else:
        pos_oracle = neg_oracle = 0.0
    difference = neg_biased - neg_oracle
    clamped = nn_mode is not None and difference < 0
    p_b = expit(s_b)
    if not clamped:
        value = pos_biased + pos_oracle + difference
        grad = _scatter(biased, (p_b - y_pos) / n)
        if m:
            _scatter(oracle, np.where(late, -1.0, 0.0) / m, out=grad)
    elif nn_mode == "plain":
        value = pos_biased + pos_oracle
        grad = _scatter(biased, np.where(y_pos, p_b - 1.0, 0.0) / n)
        _scatter(oracle, np.where(late, expit(s_o) - 1.0, 0.0) / m, out=grad)
    else:  # ascend the (negated) negative part
        value = pos_biased + pos_oracle
        grad = _scatter(biased, np.where(~y_pos, -p_b, 0.0) / n)
        _scatter(oracle, np.where(late, expit(s_o), 0.0) / m, out=grad)
    return value, grad, clamped


def _putw_terms(w, biased, oracle):
    s_b = biased.features.scores(w)
    n = len(biased)
    value = float(np.logaddexp(0.0, s_b).sum()) / n
    coef_b = expit(s_b) / n
    m = len(oracle) if oracle is not None else 0
    if m:
        s_o = oracle.features.scores(w)
        cpos = oracle.class_label == 1
        value += (
            float(np.logaddexp(0.0, -s_o[cpos]).sum())
            - float(np.logaddexp(0.0, s_o[cpos]).sum())
        ) / m
        coef_o = np.where(cpos, -1.0, 0.0) / m
    else:
        coef_o = None
    return value, coef_b, coef_o


def _subset(dataset, selector):
    return dataset if selector is None else dataset.subset(selector)


def _check_dimensions(*dims):
    dims = [d for d in dims if d is not None]
    if len(set(dims)) > 1:
        raise ValueError(f"feature dimensions disagree: {sorted(set(dims))}")
    return dims[0]


class _CorrectedFullBatch:
    """Cached full-batch evaluator for the corrected risk.

    The late-converter rows are a fixed subset, so their contribution to
    the unclamped gradient is a constant vector and their losses only need
    scores on a small cached sub-matrix; only the biased side is scored in
    full each epoch.
    """

    def __init__(self, biased, oracle, nn_mode):
        self.biased = biased
        self.nn_mode = nn_mode
        self.n = len(biased)
        self.m = len(oracle)
        self.y_pos = biased.temporal_label == 1
        self.y_pos_f = self.y_pos.astype(np.float64)
        late = risk.late_converters(oracle)
        self.late_features = oracle.features.take(late)
        features = self.late_features
        self.correction_grad = -backend.scatter_rows(
            features.indices,
            features.indptr,
            np.full(len(features), 1.0 / self.m),
            features.dimension,
        )

    def evaluate(self, w):
        biased = self.biased
        s_b = biased.features.scores(w)
        ell = np.logaddexp(0.0, -biased.temporal_label * s_b)
        pos_biased = float(ell @ self.y_pos_f) / self.n
        neg_biased = float(ell.sum()) / self.n - pos_biased
        if len(self.late_features):
            s_late = self.late_features.scores(w)
            pos_oracle = float(np.logaddexp(0.0, -s_late).sum()) / self.m
            neg_oracle = float(np.logaddexp(0.0, s_late).sum()) / self.m
        else:
            pos_oracle = neg_oracle = 0.0
        difference = neg_biased - neg_oracle
        clamped = self.nn_mode is not None and difference < 0
        p_b = expit(s_b)
        if not clamped:
            value = pos_biased + pos_oracle + difference
            grad = _scatter(biased, (p_b - self.y_pos_f) / self.n)
            grad += self.correction_grad
        elif self.nn_mode == "plain":
            value = pos_biased + pos_oracle
            grad = _scatter(biased, np.where(self.y_pos, p_b - 1.0, 0.0) / self.n)
            self._scatter_late((expit(s_late) - 1.0) / self.m, grad)
        else:  # ascend the (negated) negative part
            value = pos_biased + pos_oracle
            grad = _scatter(biased, np.where(self.y_pos, 0.0, -p_b) / self.n)
            self._scatter_late(expit(s_late) / self.m, grad)
        return value, grad

    def _scatter_late(self, coefficients, out):
        features = self.late_features
        backend.scatter_rows(features.indices, features.indptr, coefficients,
                             features.dimension, out)


class _PuFullBatch:
    """Cached full-batch evaluator for the positive-unlabeled risk.

    The composite term over oracle positives is linear in the weights, so
    its value is a dot product against a fixed vector and its gradient is
    that constant vector.
    """

    def __init__(self, biased, oracle):
        self.biased = biased
        self.n = len(biased)
        m = len(oracle)
        cpos = oracle.class_label == 1
        features = oracle.features.take(cpos)
        self.positive_grad = -backend.scatter_rows(
            features.indices,
            features.indptr,
            np.full(len(features), 1.0 / m),
            features.dimension,
        )

    def evaluate(self, w):
        s_b = self.biased.features.scores(w)
        value = float(np.logaddexp(0.0, s_b).sum()) / self.n + float(w @ self.positive_grad)
        grad = _scatter(self.biased, expit(s_b) / self.n)
        grad += self.positive_grad
        return value, grad


def _build_problem(method, data: TrainData, nn_mode):
    """Returns (dimension, primary_rows, secondary_rows_or_None, evaluate)
    where evaluate(w, primary_sel, secondary_sel) -> (value, grad)."""
    if method in ("convdf", "nndf", "putw", "pnutw"):
        if data.biased is None or data.oracle is None:
            raise ValueError(f"{method} training needs both the biased and oracle datasets")
        if len(data.biased) == 0 or len(data.oracle) == 0:
            raise ValueError(f"{method} training needs non-empty datasets")
        dim = _check_dimensions(data.biased.features.dimension, data.oracle.features.dimension)
        if method in ("convdf", "nndf"):
            state = _CorrectedFullBatch(data.biased, data.oracle, nn_mode)

            def evaluate(w, sel_p=None, sel_s=None):
                if sel_p is None and sel_s is None:
                    return state.evaluate(w)
                b = _subset(data.biased, sel_p)
                o = _subset(data.oracle, sel_s)
                value, grad, _ = _corrected_value_grad(w, b, o, nn_mode)
                return value, grad

        elif method == "putw":
            state = _PuFullBatch(data.biased, data.oracle)

            def evaluate(w, sel_p=None, sel_s=None):
                if sel_p is None and sel_s is None:
                    return state.evaluate(w)
                b = _subset(data.biased, sel_p)
                o = _subset(data.oracle, sel_s)
                value, coef_b, coef_o = _putw_terms(w, b, o)
                grad = _scatter(b, coef_b)
                if coef_o is not None:
                    _scatter(o, coef_o, out=grad)
                return value, grad

        else:  # pnutw
            omega = float(data.omega)
            if not 0.0 <= omega <= 1.0:
                raise ValueError("omega must lie in [0, 1]")

            def evaluate(w, sel_p=None, sel_s=None):
                b = _subset(data.biased, sel_p)
                o = _subset(data.oracle, sel_s)
                value_pu, coef_b, coef_o = _putw_terms(w, b, o)
                grad = _scatter(b, omega * coef_b)
                value = omega * value_pu
                if o is not None and len(o):
                    value_tw, grad_tw = _logistic_value_grad(w, o.features, o.class_label)
                    value += (1.0 - omega) * value_tw
                    grad += (1.0 - omega) * grad_tw
                    if coef_o is not None:
                        _scatter(o, omega * coef_o, out=grad)
                return value, grad

        return dim, len(data.biased), len(data.oracle), evaluate

    if method == "bl":
        if data.biased is None or len(data.biased) == 0:
            raise ValueError("bl training needs a non-empty biased dataset")

        def evaluate(w, sel_p=None, sel_s=None):
            b = _subset(data.biased, sel_p)
            return _logistic_value_grad(w, b.features, b.temporal_label)

        return data.biased.features.dimension, len(data.biased), None, evaluate

    if method == "tw":
        if data.oracle is None or len(data.oracle) == 0:
            raise ValueError("tw training needs a non-empty oracle dataset")

        def evaluate(w, sel_p=None, sel_s=None):
            o = _subset(data.oracle, sel_p)
            return _logistic_value_grad(w, o.features, o.class_label)

        return data.oracle.features.dimension, len(data.oracle), None, evaluate

    if method == "fsiw":
        if data.biased is None or len(data.biased) == 0:
            raise ValueError("fsiw training needs a non-empty biased dataset")
        if data.fsiw_weights is None:
            raise ValueError("fsiw training needs per-row weights")
        row_weights = np.ascontiguousarray(data.fsiw_weights, dtype=np.float64)
        if row_weights.shape != (len(data.biased),):
            raise ValueError("exactly one weight per biased row is required")
        if not np.all(np.isfinite(row_weights)) or np.any(row_weights < 0):
            raise ValueError("fsiw weights must be finite and non-negative")

        def evaluate(w, sel_p=None, sel_s=None):
            b = _subset(data.biased, sel_p)
            r = row_weights if sel_p is None else row_weights[sel_p]
            s = b.features.scores(w)
            n = len(b)
            value = float((np.logaddexp(0.0, -b.temporal_label * s) * r).sum()) / n
            coefficients = r * (expit(s) - (b.temporal_label == 1)) / n
            return value, _scatter(b, coefficients)

        return data.biased.features.dimension, len(data.biased), None, evaluate

    if method == "oracle":
        if data.labeled_features is None or data.labeled_classes is None:
            raise ValueError("oracle training needs a ground-truth labeled set")
        classes = np.asarray(data.labeled_classes)
        if len(data.labeled_features) == 0:
            raise ValueError("oracle training needs a non-empty labeled set")
        if classes.shape != (len(data.labeled_features),):
            raise ValueError("exactly one class per labeled row is required")
        if not np.all((classes == 1) | (classes == -1)):
            raise ValueError("classes must be -1 or +1")

        def evaluate(w, sel_p=None, sel_s=None):
            features = data.labeled_features
            labels = classes
            if sel_p is not None:
                features = features.take(sel_p)
                labels = classes[sel_p]
            return _logistic_value_grad(w, features, labels)

        return data.labeled_features.dimension, len(data.labeled_features), None, evaluate

    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def grad_convdf(model, biased, oracle) -> np.ndarray:
    """Gradient of the corrected risk at the model's weights."""
    w = _weights_of(model)
    _check_dimensions(w.size, biased.features.dimension, oracle.features.dimension)
    _, grad, _ = _corrected_value_grad(w, biased, oracle, None)
    return grad


def grad_nndf(model, biased, oracle, nn_mode: str = "plain") -> np.ndarray:
    """Gradient used by the non-negative variant: the corrected-risk
    gradient while the clamp is inactive, otherwise the branch gradient
    chosen by ``nn_mode``."""
    if nn_mode not in NN_MODES:
        raise ValueError(f"nn_mode must be one of {NN_MODES}")
    w = _weights_of(model)
    _check_dimensions(w.size, biased.features.dimension, oracle.features.dimension)
    _, grad, _ = _corrected_value_grad(w, biased, oracle, nn_mode)
    return grad


def grad_fsiw(model, biased, weights) -> np.ndarray:
    """Gradient of the importance-weighted biased risk."""
    data = TrainData(biased=biased, fsiw_weights=weights)
    _, _, _, evaluate = _build_problem("fsiw", data, None)
    _, grad = evaluate(_weights_of(model))
    return grad


def risk_and_gradient(method, model, data: TrainData, nn_mode: str = "plain"):
    """Full-batch objective value and gradient (regularization excluded).

    The generative delay baseline has two weight blocks and lives in its
    own module; it is not served here.
    """
    if method == "dfm":
        raise ValueError("the dfm baseline exposes gradients through the dfm module")
    _, _, _, evaluate = _build_problem(method, data, nn_mode if method == "nndf" else None)
    return evaluate(_weights_of(model))


def train(method: str, data: TrainData, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit ``method`` by (mini-batch) gradient descent from zero weights.

    Returns the model and a per-epoch trace of the regularized objective;
    raises :class:`DivergedError` when the objective becomes non-finite or
    exceeds the guard in magnitude.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "dfm":
        from . import dfm

        if data.biased is None or len(data.biased) == 0:
            raise ValueError("dfm training needs a non-empty biased dataset")
        return dfm.train_dfm(data.biased, config)

    nn_mode = config.nn_mode if method == "nndf" else None
    dim, n_primary, n_secondary, evaluate = _build_problem(method, data, nn_mode)
    w = np.zeros(dim)
    rng = np.random.default_rng(config.seed)
    lam = config.l2_lambda
    trace: list[float] = []
    converged = False
    use_batches = config.batch_size is not None and config.batch_size < n_primary
    if use_batches:
        n_batches = -(-n_primary // config.batch_size)

    for epoch in range(config.max_epochs):
        if use_batches:
            primary_chunks = np.array_split(rng.permutation(n_primary), n_batches)
            if n_secondary is not None:
                secondary_chunks = np.array_split(rng.permutation(n_secondary), n_batches)
            else:
                secondary_chunks = [None] * n_batches
            for chunk_p, chunk_s in zip(primary_chunks, secondary_chunks):
                _, grad = evaluate(w, chunk_p, chunk_s)
                if lam:
                    grad = grad + (2.0 * lam / dim) * w
                w -= config.learning_rate * grad

        value, grad = evaluate(w)
        objective = value
        if lam:
            objective += lam * float(w @ w) / dim
        if not np.isfinite(objective) or abs(objective) > DIVERGENCE_GUARD:
            raise DivergedError(method, epoch, objective)
        trace.append(objective)
        if lam:
            grad = grad + (2.0 * lam / dim) * w
        if float(np.max(np.abs(grad))) < config.grad_tolerance:
            converged = True
            break
        if not use_batches:
            w -= config.learning_rate * grad

    return TrainResult(model=LinearModel(w), method=method, objective_trace=trace,
                       converged=converged)


def log_uniform_candidates(count: int = 20, low: float = 1e-6, high: float = 1e-1,
                           seed: int = 0) -> np.ndarray:
    """Seeded log-uniform draw of regularization candidates."""
    if not 0 < low <= high:
        raise ValueError("need 0 < low <= high")
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(np.log(low), np.log(high), int(count)))


def _validation_risk(method, model, data: TrainData) -> float:
    if method in ("convdf", "nndf"):
        # clamped risk: bounded below, so selection is not driven by an
        # arbitrarily negative criterion
        return risk.risk_nndf(model, data.biased, data.oracle)
    if method == "bl":
        return risk.risk_bl(model, data.biased)
    if method == "tw":
        return risk.risk_tw(model, data.oracle)
    if method == "putw":
        return risk.risk_putw(model, data.biased, data.oracle)
    if method == "pnutw":
        return risk.risk_pnutw(model, data.biased, data.oracle, data.omega)
    if method == "fsiw":
        return risk.risk_fsiw(model, data.biased, data.fsiw_weights)
    if method == "dfm":
        from . import dfm

        return dfm.dfm_nll(model, data.biased)
    if method == "oracle":
        return risk.oracle_risk(model, data.labeled_features, data.labeled_classes)
    raise ValueError(f"unknown method {method!r}")


def select_lambda(method, data: TrainData, candidates, folds: int = 2,
                  config: TrainConfig = TrainConfig()) -> float:
    """Pick the regularization strength by k-fold cross-validation.

    Every candidate trains on k-1 folds and is scored with the method's
    own validation risk on the held-out fold. The reweighted method refits
    its weight models on each training fold. Divergence scores as +inf and
    ties go to the larger candidate. A single candidate is returned as is.
    """
    values = [float(c) for c in candidates]
    if not values:
        raise ValueError("at least one candidate is required")
    if len(values) == 1:
        return values[0]
    if folds < 2:
        raise ValueError("cross-validation needs at least two folds")

    rng = np.random.default_rng(config.seed)

    def fold_ids(n):
        if n < folds:
            raise ValueError("a fold would have no rows")
        ids = np.empty(n, dtype=np.int64)
        ids[rng.permutation(n)] = np.arange(n) % folds
        return ids

    ids_biased = fold_ids(len(data.biased)) if data.biased is not None else None
    ids_oracle = fold_ids(len(data.oracle)) if data.oracle is not None else None
    ids_labeled = (
        fold_ids(len(data.labeled_features)) if data.labeled_features is not None else None
    )

    def split(fold):
        def pick(dataset, ids, held_out):
            if dataset is None:
                return None
            mask = ids == fold if held_out else ids != fold
            return dataset.subset(mask)

        train_part = TrainData(
            biased=pick(data.biased, ids_biased, False),
            oracle=pick(data.oracle, ids_oracle, False),
            labeled_features=(
                None
                if data.labeled_features is None
                else data.labeled_features.take(ids_labeled != fold)
            ),
            labeled_classes=(
                None
                if data.labeled_classes is None
                else np.asarray(data.labeled_classes)[ids_labeled != fold]
            ),
            omega=data.omega,
        )
        val_part = TrainData(
            biased=pick(data.biased, ids_biased, True),
            oracle=pick(data.oracle, ids_oracle, True),
            labeled_features=(
                None
                if data.labeled_features is None
                else data.labeled_features.take(ids_labeled == fold)
            ),
            labeled_classes=(
                None
                if data.labeled_classes is None
                else np.asarray(data.labeled_classes)[ids_labeled == fold]
            ),
            omega=data.omega,
        )
        return train_part, val_part

    best = None
    for candidate in values:
        fold_scores = []
        for fold in range(folds):
            train_part, val_part = split(fold)
            fold_config = replace(config, l2_lambda=candidate)
            try:
                if method == "fsiw":
                    from . import fsiw

                    if data.oracle is None:
                        raise ValueError("fsiw selection needs the oracle dataset to refit weights")
                    models = fsiw.fit_weight_models(train_part.oracle, fold_config)
                    train_part.fsiw_weights = fsiw.weights_for(train_part.biased, models)
                    val_part.fsiw_weights = fsiw.weights_for(val_part.biased, models)
                result = train(method, train_part, fold_config)
            except DivergedError:
                fold_scores = [np.inf]
                break
            fold_scores.append(_validation_risk(method, result.model, val_part))
        score = float(np.mean(fold_scores))
        key = (score, -candidate)
        if best is None or key < best[0]:
            best = (key, candidate)
    return best[1]


# --- text serialization ----------------------------------------------------

def save_model(path, model: LinearModel, method: str) -> None:
    """Write the text model format: a two-line header (method, dimension)
    followed by one ``index<TAB>weight`` line per non-zero coordinate.
    Weights use shortest round-trip decimal rendering."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"method\t{method}\n")
        fh.write(f"dimension\t{model.dimension}\n")
        write_weight_lines(fh, model.weights)


def write_weight_lines(fh, weights: np.ndarray) -> None:
    for i in np.flatnonzero(weights):
        fh.write(f"{i}\t{float(weights[i])!r}\n")


def read_model_method(path) -> str:
    """Peek the method name from a model file header."""
    with open(path, "r", encoding="ascii") as fh:
        key, _, value = fh.readline().rstrip("\n").partition("\t")
    if key != "method" or not value:
        raise ValueError(f"{path}: not a model file (missing method header)")
    return value


def load_model(path) -> tuple[LinearModel, str]:
    """Read a linear model back; returns (model, method)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = dict(line.split("\t", 1) for line in lines[:2])
    if "method" not in header or "dimension" not in header:
        raise ValueError(f"{path}: malformed model header")
    dimension = int(header["dimension"])
    weights = np.zeros(dimension)
    for line in lines[2:]:
        if not line:
            continue
        key, _, value = line.partition("\t")
        if key == "section":
            raise ValueError(
                f"{path}: sectioned model file; use the dfm module loader"
            )
        weights[int(key)] = float(value)
    return LinearModel(weights), header["method"]
