"""Event logs, snapshot datasets, and temporal-label semantics.

A click log records, for every event, its arrival time, whether it ever
converts, and how long the conversion took. A training snapshot taken at
time T only sees the labels that have flipped by T, so recently arrived
positives are still labelled negative. This module builds the two training
views everything else consumes:

* the biased dataset: every logged event with its label as of the snapshot
  and the time it has been observed;
* the oracle dataset: only events observed for at least the deadline, whose
  snapshot labels are trusted as the true class, together with a flag
  recording whether the label was already correct one deadline earlier.

Features are sparse binary vectors; the last column of the feature space is
a reserved always-on bias.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import backend

__all__ = [
    "FeatureVector",
    "FeatureMatrix",
    "ClickEvent",
    "EventLog",
    "SnapshotConfig",
    "BiasedExample",
    "BiasedDataset",
    "OracleExample",
    "OracleDataset",
    "ClassPriors",
    "temporal_label",
    "build_biased_dataset",
    "build_oracle_dataset",
    "estimate_priors",
    "predict",
    "classify",
    "format_event_line",
    "parse_event_line",
    "write_event_log",
    "read_event_log",
]


def _read_only(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class FeatureVector:
    """Sparse binary feature row: the listed indices hold value 1.0.

    ``indices`` must be strictly increasing, all below ``dimension``, and
    must contain the bias column ``dimension - 1``.
    """

    indices: np.ndarray
    dimension: int

    def __post_init__(self):
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indices.ndim != 1:
            raise ValueError("feature indices must be one-dimensional")
        if indices.size == 0 or indices[-1] != self.dimension - 1:
            raise ValueError("the bias column (dimension - 1) must be active")
        if indices[0] < 0:
            raise ValueError("feature indices must be non-negative")
        if indices.size > 1 and not np.all(indices[1:] > indices[:-1]):
            raise ValueError("feature indices must be strictly increasing")
        object.__setattr__(self, "indices", _read_only(indices))

    @property
    def bias_index(self) -> int:
        return self.dimension - 1

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        dense[self.indices] = 1.0
        return dense


class FeatureMatrix:
    """CSR-layout stack of binary feature rows over one shared space."""

    __slots__ = ("indices", "indptr", "dimension")

    def __init__(self, indices, indptr, dimension, validate=True):
        self.indices = _read_only(np.ascontiguousarray(indices, dtype=np.int64))
        self.indptr = _read_only(np.ascontiguousarray(indptr, dtype=np.int64))
        self.dimension = int(dimension)
        if validate:
            self._validate()

    def _validate(self):
        indptr, indices = self.indptr, self.indices
        if indptr.ndim != 1 or indptr.size == 0 or indptr[0] != 0:
            raise ValueError("indptr must be one-dimensional and start at 0")
        if indptr[-1] != indices.size:
            raise ValueError("indptr must end at len(indices)")
        lengths = np.diff(indptr)
        if len(self) and lengths.min() < 1:
            raise ValueError("every row must contain at least the bias column")
        if indices.size:
            if indices.min() < 0 or indices.max() >= self.dimension:
                raise ValueError("feature indices out of range")
            if np.any(indices[indptr[1:] - 1] != self.dimension - 1):
                raise ValueError("a row is missing the bias column")
            non_increasing = np.diff(indices) <= 0
            non_increasing[indptr[1:-1] - 1] = False  # row boundaries may reset
            if non_increasing.any():
                raise ValueError("indices must be strictly increasing within a row")

    def __len__(self) -> int:
        return self.indptr.size - 1

    def row(self, i: int) -> FeatureVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return FeatureVector(self.indices[lo:hi], self.dimension)

    @classmethod
    def from_rows(cls, rows: Iterable[FeatureVector], dimension: int | None = None):
        rows = list(rows)
        if dimension is None:
            if not rows:
                raise ValueError("dimension is required for an empty matrix")
            dimension = rows[0].dimension
        for r in rows:
            if r.dimension != dimension:
                raise ValueError("all rows must share one feature dimension")
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        if rows:
            indptr[1:] = np.cumsum([r.indices.size for r in rows])
            indices = np.concatenate([r.indices for r in rows])
        else:
            indices = np.empty(0, dtype=np.int64)
        return cls(indices, indptr, dimension, validate=False)

    def take(self, selector) -> "FeatureMatrix":
        """Row subset; ``selector`` is a boolean mask or an index array."""
        selector = np.asarray(selector)
        if selector.dtype == bool:
            selector = np.flatnonzero(selector)
        lengths = np.diff(self.indptr)[selector]
        new_indptr = np.zeros(selector.size + 1, dtype=np.int64)
        np.cumsum(lengths, out=new_indptr[1:])
        positions = (
            np.arange(new_indptr[-1], dtype=np.int64)
            - np.repeat(new_indptr[:-1], lengths)
            + np.repeat(self.indptr[selector], lengths)
        )
        return FeatureMatrix(self.indices[positions], new_indptr, self.dimension, validate=False)

    def scores(self, weights: np.ndarray) -> np.ndarray:
        """Per-row dot products against a dense weight vector."""
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        if weights.shape != (self.dimension,):
            raise ValueError(
                f"weight vector of size {weights.size} does not match feature dimension {self.dimension}"
            )
        return backend.row_scores(self.indices, self.indptr, weights)


@dataclass(frozen=True)
class ClickEvent:
    """One logged click: features, arrival hour, and eventual outcome.

    ``converted`` is the true class (+1 or -1). ``delay`` is the lag in
    hours between arrival and conversion and exists exactly for converters.
    """

    features: FeatureVector
    arrival: float
    converted: int
    delay: float | None = None

    def __post_init__(self):
        if self.converted not in (-1, 1):
            raise ValueError("converted must be -1 or +1")
        if self.converted == 1:
            if self.delay is None or not math.isfinite(self.delay) or self.delay < 0:
                raise ValueError("a converting event needs a finite non-negative delay")
        elif self.delay is not None:
            raise ValueError("a non-converting event cannot carry a delay")
        if not math.isfinite(self.arrival):
            raise ValueError("arrival must be finite")


class EventLog(Sequence):
    """Columnar sequence of :class:`ClickEvent` rows.

    ``delay`` is NaN for non-converters so the columns stay rectangular.
    """

    __slots__ = ("features", "arrival", "converted", "delay")

    def __init__(self, features: FeatureMatrix, arrival, converted, delay, validate=True):
        self.features = features
        self.arrival = _read_only(np.ascontiguousarray(arrival, dtype=np.float64))
        self.converted = _read_only(np.ascontiguousarray(converted, dtype=np.int8))
        self.delay = _read_only(np.ascontiguousarray(delay, dtype=np.float64))
        if validate:
            self._validate()

    def _validate(self):
        n = len(self.features)
        if not (self.arrival.shape == self.converted.shape == self.delay.shape == (n,)):
            raise ValueError("column lengths disagree")
        if not np.all(np.isfinite(self.arrival)):
            raise ValueError("arrivals must be finite")
        if not np.all((self.converted == 1) | (self.converted == -1)):
            raise ValueError("converted must be -1 or +1")
        pos = self.converted == 1
        pos_delay = self.delay[pos]
        if pos_delay.size and (not np.all(np.isfinite(pos_delay)) or pos_delay.min() < 0):
            raise ValueError("converting events need finite non-negative delays")
        if not np.all(np.isnan(self.delay[~pos])):
            raise ValueError("non-converting events must have NaN delay")

    @property
    def dimension(self) -> int:
        return self.features.dimension

    def __len__(self) -> int:
        return len(self.features)

    def __getitem__(self, i) -> ClickEvent:
        i = range(len(self))[i]  # normalizes negatives, raises IndexError
        converted = int(self.converted[i])
        delay = float(self.delay[i]) if converted == 1 else None
        return ClickEvent(self.features.row(i), float(self.arrival[i]), converted, delay)

    def subset(self, selector) -> "EventLog":
        selector = np.asarray(selector)
        if selector.dtype == bool:
            selector = np.flatnonzero(selector)
        return EventLog(
            self.features.take(selector),
            self.arrival[selector],
            self.converted[selector],
            self.delay[selector],
            validate=False,
        )

    @classmethod
    def from_events(cls, events: Iterable[ClickEvent], dimension: int | None = None):
        events = list(events)
        features = FeatureMatrix.from_rows([e.features for e in events], dimension)
        arrival = np.array([e.arrival for e in events], dtype=np.float64)
        converted = np.array([e.converted for e in events], dtype=np.int8)
        delay = np.array(
            [e.delay if e.delay is not None else np.nan for e in events], dtype=np.float64
        )
        return cls(features, arrival, converted, delay, validate=False)


def _as_event_log(log) -> EventLog:
    return log if isinstance(log, EventLog) else EventLog.from_events(log)


@dataclass(frozen=True)
class SnapshotConfig:
    """Snapshot time T and label-maturity deadline, both in hours.

    The deadline may not exceed half the snapshot horizon: the oracle
    construction shifts the snapshot back by one deadline and still needs
    every retained event to be observed for at least a full deadline.
    """

    snapshot_time: float
    deadline: float

    def __post_init__(self):
        if not self.deadline > 0:
            raise ValueError("deadline must be positive")
        if not self.deadline <= self.snapshot_time / 2:
            raise ValueError("deadline must not exceed half the snapshot time")


def temporal_label(event: ClickEvent, elapsed: float) -> int:
    """Label visible ``elapsed`` hours after the event arrived.

    Flips from -1 to +1 once the conversion delay has passed, and never
    flips back; non-converters stay -1 forever.
    """
    if elapsed < 0:
        raise ValueError("elapsed must be non-negative")
    if event.converted == 1 and event.delay <= elapsed:
        return 1
    return -1


@dataclass(frozen=True)
class BiasedExample:
    """A biased-dataset row: snapshot label and observation age."""

    features: FeatureVector
    temporal_label: int
    elapsed: float
    observed_delay: float | None = None

    def __post_init__(self):
        if self.temporal_label not in (-1, 1):
            raise ValueError("temporal_label must be -1 or +1")
        if self.elapsed < 0:
            raise ValueError("elapsed must be non-negative")
        if self.temporal_label == 1:
            if self.observed_delay is None or self.observed_delay > self.elapsed:
                raise ValueError("a positive row needs observed_delay <= elapsed")
        elif self.observed_delay is not None:
            raise ValueError("a negative row cannot carry an observed delay")


@dataclass(frozen=True)
class OracleExample:
    """An oracle-dataset row: trusted class plus the earlier-label flag.

    ``snapshot_correct`` is -1 exactly for late converters, rows whose
    label one deadline before the snapshot still disagreed with the class.
    """

    features: FeatureVector
    class_label: int
    snapshot_correct: int
    elapsed_at_shifted_snapshot: float

    def __post_init__(self):
        if self.class_label not in (-1, 1) or self.snapshot_correct not in (-1, 1):
            raise ValueError("labels must be -1 or +1")
        if self.snapshot_correct == -1 and self.class_label == -1:
            raise ValueError("a never-converting row is always correctly negative")
        if self.elapsed_at_shifted_snapshot < 0:
            raise ValueError("shifted elapsed must be non-negative")


class _ColumnarDataset(Sequence):
    __slots__ = ("features",)

    def subset(self, selector):
        selector = np.asarray(selector)
        if selector.dtype == bool:
            selector = np.flatnonzero(selector)
        return self._take(selector)

    def __len__(self):
        return len(self.features)


class BiasedDataset(_ColumnarDataset):
    """All logged events with their labels as of the snapshot."""

    __slots__ = ("temporal_label", "elapsed", "observed_delay")

    def __init__(self, features, temporal_label, elapsed, observed_delay, validate=True):
        self.features = features
        self.temporal_label = _read_only(np.ascontiguousarray(temporal_label, dtype=np.int8))
        self.elapsed = _read_only(np.ascontiguousarray(elapsed, dtype=np.float64))
        self.observed_delay = _read_only(np.ascontiguousarray(observed_delay, dtype=np.float64))
        if validate:
            self._validate()

    def _validate(self):
        n = len(self.features)
        if not (self.temporal_label.shape == self.elapsed.shape == self.observed_delay.shape == (n,)):
            raise ValueError("column lengths disagree")
        if not np.all((self.temporal_label == 1) | (self.temporal_label == -1)):
            raise ValueError("temporal labels must be -1 or +1")
        if n and self.elapsed.min() < 0:
            raise ValueError("elapsed must be non-negative")
        pos = self.temporal_label == 1
        if np.any(self.observed_delay[pos] > self.elapsed[pos]) or np.any(
            np.isnan(self.observed_delay[pos])
        ):
            raise ValueError("positive rows need observed_delay <= elapsed")
        if not np.all(np.isnan(self.observed_delay[~pos])):
            raise ValueError("negative rows must have NaN observed_delay")

    def __getitem__(self, i) -> BiasedExample:
        i = range(len(self))[i]
        label = int(self.temporal_label[i])
        observed = float(self.observed_delay[i]) if label == 1 else None
        return BiasedExample(self.features.row(i), label, float(self.elapsed[i]), observed)

    def _take(self, selector):
        return BiasedDataset(
            self.features.take(selector),
            self.temporal_label[selector],
            self.elapsed[selector],
            self.observed_delay[selector],
            validate=False,
        )


class OracleDataset(_ColumnarDataset):
    """Deadline-matured events with trusted classes and correctness flags."""

    __slots__ = ("class_label", "snapshot_correct", "elapsed_at_shifted_snapshot")

    def __init__(self, features, class_label, snapshot_correct, elapsed_at_shifted_snapshot,
                 validate=True):
        self.features = features
        self.class_label = _read_only(np.ascontiguousarray(class_label, dtype=np.int8))
        self.snapshot_correct = _read_only(np.ascontiguousarray(snapshot_correct, dtype=np.int8))
        self.elapsed_at_shifted_snapshot = _read_only(
            np.ascontiguousarray(elapsed_at_shifted_snapshot, dtype=np.float64)
        )
        if validate:
            self._validate()

    def _validate(self):
        n = len(self.features)
        if not (
            self.class_label.shape
            == self.snapshot_correct.shape
            == self.elapsed_at_shifted_snapshot.shape
            == (n,)
        ):
            raise ValueError("column lengths disagree")
        if not np.all((self.class_label == 1) | (self.class_label == -1)):
            raise ValueError("class labels must be -1 or +1")
        if not np.all((self.snapshot_correct == 1) | (self.snapshot_correct == -1)):
            raise ValueError("correctness flags must be -1 or +1")
        if np.any((self.snapshot_correct == -1) & (self.class_label == -1)):
            raise ValueError("a never-converting row is always correctly negative")
        if n and self.elapsed_at_shifted_snapshot.min() < 0:
            raise ValueError("shifted elapsed must be non-negative")

    def __getitem__(self, i) -> OracleExample:
        i = range(len(self))[i]
        return OracleExample(
            self.features.row(i),
            int(self.class_label[i]),
            int(self.snapshot_correct[i]),
            float(self.elapsed_at_shifted_snapshot[i]),
        )

    def _take(self, selector):
        return OracleDataset(
            self.features.take(selector),
            self.class_label[selector],
            self.snapshot_correct[selector],
            self.elapsed_at_shifted_snapshot[selector],
            validate=False,
        )


def build_biased_dataset(log, cfg: SnapshotConfig) -> BiasedDataset:
    """Snapshot every event at time T with its current temporal label.

    Output order matches input order. Events arriving after the snapshot
    are rejected.
    """
    log = _as_event_log(log)
    if len(log) and log.arrival.max() > cfg.snapshot_time:
        raise ValueError("log contains events arriving after the snapshot time")
    elapsed = cfg.snapshot_time - log.arrival
    flipped = (log.converted == 1) & (log.delay <= elapsed)
    labels = np.where(flipped, 1, -1).astype(np.int8)
    observed = np.where(flipped, log.delay, np.nan)
    return BiasedDataset(log.features, labels, elapsed, observed, validate=False)


def build_oracle_dataset(log, cfg: SnapshotConfig) -> OracleDataset:
    """Keep events observed for at least the deadline and trust their
    snapshot labels as the class.

    The class label is the temporal label at the snapshot itself;
    ``snapshot_correct`` compares it with the label one deadline earlier.
    Inclusion is ``arrival <= snapshot_time - deadline`` (boundary kept).
    """
    log = _as_event_log(log)
    if len(log) and log.arrival.max() > cfg.snapshot_time:
        raise ValueError("log contains events arriving after the snapshot time")
    cutoff = cfg.snapshot_time - cfg.deadline
    sub = log.subset(log.arrival <= cutoff)
    final_elapsed = cfg.snapshot_time - sub.arrival
    shifted_elapsed = cutoff - sub.arrival
    final_pos = (sub.converted == 1) & (sub.delay <= final_elapsed)
    shifted_pos = (sub.converted == 1) & (sub.delay <= shifted_elapsed)
    class_label = np.where(final_pos, 1, -1).astype(np.int8)
    correct = np.where(shifted_pos == final_pos, 1, -1).astype(np.int8)
    return OracleDataset(sub.features, class_label, correct, shifted_elapsed, validate=False)


@dataclass(frozen=True)
class ClassPriors:
    """Empirical prior estimates.

    ``gamma``: rate of true positives; ``pi``: rate of snapshot positives;
    ``zeta``: rate of late converters (true positives whose earlier label
    was still wrong). At population level gamma = pi + zeta when all three
    refer to the same observation ages.
    """

    gamma: float
    pi: float
    zeta: float

    def __post_init__(self):
        for name in ("gamma", "pi", "zeta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def estimate_priors(biased: BiasedDataset, oracle: OracleDataset) -> ClassPriors:
    """Diagnostic prior estimates from a snapshot pair."""
    if len(biased) == 0 or len(oracle) == 0:
        raise ValueError("priors are undefined on an empty dataset")
    pi = float(np.mean(biased.temporal_label == 1))
    gamma = float(np.mean(oracle.class_label == 1))
    zeta = float(np.mean((oracle.snapshot_correct == -1) & (oracle.class_label == 1)))
    return ClassPriors(gamma=gamma, pi=pi, zeta=zeta)


def predict(model, x: FeatureVector) -> tuple[float, float]:
    """Score and conversion probability for a single feature row."""
    weights = np.asarray(getattr(model, "weights", model), dtype=np.float64)
    if weights.shape != (x.dimension,):
        raise ValueError(
            f"model dimension {weights.size} does not match feature dimension {x.dimension}"
        )
    score = float(weights[x.indices].sum())
    return score, float(expit(score))


def classify(score: float) -> int:
    """Hard label from a score; the tie at 0 goes to +1."""
    return 1 if score >= 0 else -1


def format_event_line(arrival: float, converted: int, delay, indices) -> str:
    """One event in the log-file format: tab-separated arrival hours,
    converted flag (0/1), delay hours (empty for non-converters), and
    space-separated feature indices.
    """
    delay_text = "" if delay is None else repr(float(delay))
    flag = 1 if converted == 1 else 0
    return f"{float(arrival)!r}\t{flag}\t{delay_text}\t{' '.join(str(i) for i in indices)}"


def parse_event_line(line: str, dimension: int) -> ClickEvent:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise ValueError(f"expected 4 tab-separated fields, got {len(parts)}")
    arrival = float(parts[0])
    if parts[1] not in ("0", "1"):
        raise ValueError(f"converted flag must be 0 or 1, got {parts[1]!r}")
    converted = 1 if parts[1] == "1" else -1
    delay = float(parts[2]) if parts[2] else None
    indices = np.fromiter((int(tok) for tok in parts[3].split()), dtype=np.int64)
    return ClickEvent(FeatureVector(indices, dimension), arrival, converted, delay)


def write_event_log(path, log) -> None:
    """Write events in the line format; floats round-trip bit-exactly."""
    log = _as_event_log(log)
    with open(path, "w", encoding="ascii") as fh:
        for i in range(len(log)):
            lo, hi = log.features.indptr[i], log.features.indptr[i + 1]
            converted = int(log.converted[i])
            delay = float(log.delay[i]) if converted == 1 else None
            line = format_event_line(
                float(log.arrival[i]), converted, delay, log.features.indices[lo:hi]
            )
            fh.write(line + "\n")


def read_event_log(path, dimension: int) -> EventLog:
    """Read the line format back into a columnar log."""
    arrivals, converted, delays, rows = [], [], [], []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                event = parse_event_line(line, dimension)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            arrivals.append(event.arrival)
            converted.append(event.converted)
            delays.append(event.delay if event.delay is not None else np.nan)
            rows.append(event.features)
    features = FeatureMatrix.from_rows(rows, dimension)
    return EventLog(
        features,
        np.array(arrivals, dtype=np.float64),
        np.array(converted, dtype=np.int8),
        np.array(delays, dtype=np.float64),
        validate=False,
    )
