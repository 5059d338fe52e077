"""Conversion-log ingestion: raw-line parsing, hashed sparse features, and
train/test window slicing.

The raw format is tab-separated: click timestamp (seconds), conversion
timestamp (seconds, empty when the click never converts), a block of
integer fields, then a block of categorical tokens; any field may be
empty. Every present field is hashed, together with its position, into a
2**24-column binary space by 64-bit FNV-1a under a fixed seed string, so
indices are identical across runs and platforms. Integer fields are
log-square bucketized first (values above 2 map to floor(ln(v)**2)), a
cheap standard coarsening; disable it through the schema if the raw
values should hash as is. The bias column sits at index 2**24.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backend
from .core import ClickEvent, EventLog, FeatureVector, format_event_line

__all__ = [
    "HASH_BITS",
    "HASH_SPACE",
    "DIMENSION",
    "HASH_SEED_TEXT",
    "SECONDS_PER_HOUR",
    "CriteoSchema",
    "DEFAULT_SCHEMA",
    "RawCriteoRow",
    "LineParseError",
    "parse_line",
    "serialize_line",
    "log_square_bucket",
    "hash_token",
    "hash_features",
    "window_split",
    "PrepStats",
    "prepare_stream",
    "write_prep_meta",
]

HASH_BITS = 24
HASH_SPACE = 1 << HASH_BITS
DIMENSION = HASH_SPACE + 1  # bias at index 2**24
HASH_SEED_TEXT = b"dflearn.criteo.v1"
SECONDS_PER_HOUR = 3600.0

# FNV-1a state after absorbing the seed string; tokens continue from here.
_SEED_STATE = backend.fnv1a64(HASH_SEED_TEXT)


def log_square_bucket(value: int) -> int:
    """floor(ln(v)**2) for v > 2; small and negative values pass through."""
    if value <= 2:
        return value
    return int(math.floor(math.log(value) ** 2))


@dataclass(frozen=True)
class CriteoSchema:
    """Raw-line layout and feature-engineering knobs.

    The public conversion-log release carries 8 integer and 9 categorical
    fields. ``integer_transform`` is the bucketing hook applied before
    hashing (None hashes raw values).
    """

    n_integer: int = 8
    n_categorical: int = 9
    integer_transform: Callable[[int], int] | None = field(default=log_square_bucket)

    @property
    def n_fields(self) -> int:
        return 2 + self.n_integer + self.n_categorical


DEFAULT_SCHEMA = CriteoSchema()


@dataclass(frozen=True)
class RawCriteoRow:
    click_ts: int
    conversion_ts: int | None
    integer_fields: tuple
    categorical_fields: tuple


class LineParseError(ValueError):
    """A malformed raw line; ``reason`` keys the quarantine counters."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


def parse_line(line: str, schema: CriteoSchema = DEFAULT_SCHEMA) -> RawCriteoRow:
    """Parse one raw line; raises :class:`LineParseError` on malformed input."""
    fields = line.rstrip("\n").split("\t")
    if len(fields) != schema.n_fields:
        raise LineParseError(
            "field_count", f"expected {schema.n_fields} fields, got {len(fields)}"
        )
    try:
        click_ts = int(fields[0])
    except ValueError:
        raise LineParseError("bad_timestamp", f"non-numeric click timestamp {fields[0]!r}") from None
    if fields[1]:
        try:
            conversion_ts = int(fields[1])
        except ValueError:
            raise LineParseError(
                "bad_timestamp", f"non-numeric conversion timestamp {fields[1]!r}"
            ) from None
        if conversion_ts < click_ts:
            raise LineParseError("conversion_before_click", "conversion precedes the click")
    else:
        conversion_ts = None
    integers = []
    for raw in fields[2 : 2 + schema.n_integer]:
        if raw == "":
            integers.append(None)
            continue
        try:
            integers.append(int(raw))
        except ValueError:
            raise LineParseError("bad_integer", f"non-numeric integer field {raw!r}") from None
    categoricals = tuple(raw if raw != "" else None for raw in fields[2 + schema.n_integer :])
    return RawCriteoRow(click_ts, conversion_ts, tuple(integers), categoricals)


def serialize_line(row: RawCriteoRow) -> str:
    """Inverse of :func:`parse_line`; round-trips well-formed lines."""
    fields = [str(row.click_ts), "" if row.conversion_ts is None else str(row.conversion_ts)]
    fields.extend("" if v is None else str(v) for v in row.integer_fields)
    fields.extend("" if v is None else str(v) for v in row.categorical_fields)
    return "\t".join(fields)


def hash_token(token: str) -> int:
    """Feature index of one position-tagged token, below 2**24."""
    return backend.fnv1a64(token.encode("utf-8"), _SEED_STATE) % HASH_SPACE


def hash_features(row: RawCriteoRow, schema: CriteoSchema = DEFAULT_SCHEMA) -> ClickEvent:
    """Hashed sparse event; colliding fields share an index by design."""
    tokens = []
    for position, value in enumerate(row.integer_fields):
        if value is None:
            continue
        if schema.integer_transform is not None:
            value = schema.integer_transform(value)
        tokens.append(f"i{position}={value}")
    for position, value in enumerate(row.categorical_fields):
        if value is not None:
            tokens.append(f"c{position}={value}")
    hashed = sorted({hash_token(t) for t in tokens})
    indices = np.empty(len(hashed) + 1, dtype=np.int64)
    indices[: len(hashed)] = hashed
    indices[-1] = HASH_SPACE
    features = FeatureVector(indices, DIMENSION)
    arrival = row.click_ts / SECONDS_PER_HOUR
    if row.conversion_ts is None:
        return ClickEvent(features, arrival, -1)
    delay = (row.conversion_ts - row.click_ts) / SECONDS_PER_HOUR
    return ClickEvent(features, arrival, 1, delay)


def window_split(events, test_day: int, train_weeks: int = 3):
    """Half-open day windows by click time.

    Test rows arrive within [test_day, test_day + 1) days; train rows
    within the ``train_weeks`` weeks before the test day. Both windows
    must be non-empty.
    """
    log = events if isinstance(events, EventLog) else EventLog.from_events(events)
    day_hours = 24.0
    test_start = test_day * day_hours
    train_start = test_start - train_weeks * 7 * day_hours
    test_mask = (log.arrival >= test_start) & (log.arrival < test_start + day_hours)
    train_mask = (log.arrival >= train_start) & (log.arrival < test_start)
    if not train_mask.any():
        raise ValueError(f"no training rows in the {train_weeks} weeks before day {test_day}")
    if not test_mask.any():
        raise ValueError(f"no test rows on day {test_day}")
    return log.subset(train_mask), log.subset(test_mask)


@dataclass
class PrepStats:
    rows_read: int = 0
    rows_written: int = 0
    quarantined: dict = field(default_factory=dict)
    nnz: int = 0
    max_index: int = -1
    distinct_indices: int = 0

    @property
    def rows_quarantined(self) -> int:
        return sum(self.quarantined.values())


def prepare_stream(raw_path, out_path, schema: CriteoSchema = DEFAULT_SCHEMA) -> PrepStats:
    """Stream raw lines into the event-log format.

    Malformed rows are counted per reason and skipped, never fatal. Memory
    stays constant in the file size (the distinct-index tracker is a fixed
    2**24-bit table).
    """
    stats = PrepStats()
    seen = np.zeros(HASH_SPACE + 1, dtype=bool)
    with open(raw_path, "r", encoding="utf-8") as source, open(
        out_path, "w", encoding="ascii"
    ) as sink:
        for line in source:
            if not line.strip():
                continue
            stats.rows_read += 1
            try:
                event = hash_features(parse_line(line, schema), schema)
            except LineParseError as exc:
                stats.quarantined[exc.reason] = stats.quarantined.get(exc.reason, 0) + 1
                continue
            indices = event.features.indices
            seen[indices] = True
            stats.nnz += int(indices.size)
            stats.max_index = max(stats.max_index, int(indices[-2]) if indices.size > 1 else -1)
            sink.write(
                format_event_line(event.arrival, event.converted, event.delay, indices) + "\n"
            )
            stats.rows_written += 1
    stats.distinct_indices = int(seen.sum())
    return stats


def write_prep_meta(path, stats: PrepStats) -> None:
    """Index-statistics sidecar in key = value form."""
    lines = [
        f"dimension = {DIMENSION}",
        f"hash_bits = {HASH_BITS}",
        f"hash_seed = {HASH_SEED_TEXT.decode('ascii')}",
        f"rows_read = {stats.rows_read}",
        f"rows_written = {stats.rows_written}",
        f"rows_quarantined = {stats.rows_quarantined}",
        f"nnz = {stats.nnz}",
        f"max_hashed_index = {stats.max_index}",
        f"distinct_indices = {stats.distinct_indices}",
    ]
    for reason in sorted(stats.quarantined):
        lines.append(f"quarantined_{reason} = {stats.quarantined[reason]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
