"""Shared test utilities: tiny dataset builders, independent oracles, and
deterministic raw-log synthesis for the ingestion tests."""

from __future__ import annotations

import numpy as np

from dflearn.core import (
    BiasedDataset,
    ClickEvent,
    EventLog,
    FeatureMatrix,
    FeatureVector,
    OracleDataset,
)


def fv(dimension, *active):
    """Feature row with the given active columns; the bias is added."""
    indices = sorted(set(active) | {dimension - 1})
    return FeatureVector(np.array(indices, dtype=np.int64), dimension)


def feature_matrix(dimension, rows):
    return FeatureMatrix.from_rows([fv(dimension, *r) for r in rows], dimension)


def biased_dataset(dimension, rows):
    """rows: sequence of (active_columns, temporal_label, elapsed, observed_delay)."""
    features = feature_matrix(dimension, [r[0] for r in rows])
    label = np.array([r[1] for r in rows], dtype=np.int8)
    elapsed = np.array([r[2] for r in rows], dtype=np.float64)
    observed = np.array(
        [r[3] if len(r) > 3 and r[3] is not None else np.nan for r in rows], dtype=np.float64
    )
    observed = np.where(label == 1, np.where(np.isnan(observed), 0.0, observed), np.nan)
    return BiasedDataset(features, label, elapsed, observed)


def oracle_dataset(dimension, rows):
    """rows: sequence of (active_columns, class_label, snapshot_correct, elapsed)."""
    features = feature_matrix(dimension, [r[0] for r in rows])
    class_label = np.array([r[1] for r in rows], dtype=np.int8)
    correct = np.array([r[2] for r in rows], dtype=np.int8)
    elapsed = np.array([r[3] if len(r) > 3 else 0.0 for r in rows], dtype=np.float64)
    return OracleDataset(features, class_label, correct, elapsed)


def random_snapshot_pair(rng, dimension=8, n_biased=40, n_oracle=30):
    """Random biased/oracle datasets (valid but arbitrary) for identity tests."""

    def random_rows(n):
        rows = []
        for _ in range(n):
            k = rng.integers(0, dimension - 1)
            active = rng.choice(dimension - 1, size=k, replace=False)
            rows.append(tuple(int(a) for a in active))
        return rows

    labels = rng.choice([-1, 1], size=n_biased)
    elapsed = rng.uniform(0.0, 50.0, n_biased)
    biased_rows = [
        (row, int(label), float(e), float(rng.uniform(0.0, e)) if label == 1 else None)
        for row, label, e in zip(random_rows(n_biased), labels, elapsed)
    ]
    biased = biased_dataset(dimension, biased_rows)

    class_label = rng.choice([-1, 1], size=n_oracle)
    correct = np.where(
        class_label == 1, rng.choice([-1, 1], size=n_oracle), 1
    )
    oracle_rows = [
        (row, int(c), int(s), float(rng.uniform(0.0, 30.0)))
        for row, c, s in zip(random_rows(n_oracle), class_label, correct)
    ]
    return biased, oracle_dataset(dimension, oracle_rows)


def finite_difference(objective, w, h=1e-6):
    """Central-difference gradient of a scalar objective."""
    grad = np.empty(w.size)
    for i in range(w.size):
        forward = w.copy()
        forward[i] += h
        backward = w.copy()
        backward[i] -= h
        grad[i] = (objective(forward) - objective(backward)) / (2.0 * h)
    return grad


def relative_gradient_error(analytic, numeric):
    return float(np.max(np.abs(analytic - numeric) / (np.abs(analytic) + 1e-8)))


def brute_force_average_precision(scores, labels):
    """Independent AUC-PR oracle: explicit per-threshold counting."""
    scores = list(map(float, scores))
    labels = list(labels)
    n_pos = sum(1 for y in labels if y == 1)
    assert n_pos > 0
    thresholds = sorted(set(scores), reverse=True)
    area = 0.0
    previous_recall = 0.0
    for threshold in thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y != 1)
        precision = tp / (tp + fp)
        recall = tp / n_pos
        area += (recall - previous_recall) * precision
        previous_recall = recall
    return area


def sample_lines_criteo(n, seed, n_integer=8, n_categorical=9, day_span=26):
    """Deterministic well-formed raw conversion-log lines."""
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(n):
        click = int(rng.integers(0, day_span * 86400))
        fields = [str(click)]
        if rng.random() < 0.25:
            delay = int(rng.integers(1, 3 * 86400))
            fields.append(str(click + delay))
        else:
            fields.append("")
        for _ in range(n_integer):
            if rng.random() < 0.15:
                fields.append("")
            else:
                fields.append(str(int(rng.integers(0, 1_000_000))))
        for _ in range(n_categorical):
            if rng.random() < 0.1:
                fields.append("")
            else:
                fields.append(format(int(rng.integers(0, 1 << 40)), "x"))
        lines.append("\t".join(fields))
    return lines


def event_log_from_raw_lines(lines):
    """Parse and hash raw lines into an event log (well-formed input only)."""
    from dflearn.criteo import hash_features, parse_line

    return EventLog.from_events([hash_features(parse_line(line)) for line in lines])
