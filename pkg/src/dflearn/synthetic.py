"""Seeded synthetic ad-click generator with a non-stationarity knob.

Every sample carries 20 Bernoulli features plus a one-hot campaign over 7
campaigns (one new campaign launches per day) and the bias, 28 columns in
all. The binary features drive both the conversion rate and the delay
scale; campaigns add a conversion-rate shift that grows with launch day,
scaled by ``eta``. With ``eta = 0`` the campaigns are inert and the data
is stationary; larger values shift the newest campaigns' conversion rates
upward, so a model trained only on matured data keeps missing the newest
campaign's behavior.

The module also provides a second, deliberately stationary generator
(:func:`generate_iid_window`) used by the statistical tests: its elapsed
times are exponential, so the sub-population past any deadline has, after
shifting, the same elapsed law as the whole population (memorylessness),
and its delays are capped at the deadline. Those are exactly the premises
under which the corrected risk is unbiased, which is what the Monte-Carlo
checks need to hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import EventLog, FeatureMatrix, SnapshotConfig, build_biased_dataset, build_oracle_dataset

__all__ = [
    "N_BINARY_FEATURES",
    "N_CAMPAIGNS",
    "DIMENSION",
    "HOURS_PER_DAY",
    "SyntheticParams",
    "SyntheticLog",
    "generate_params",
    "generate_log",
    "make_snapshot",
    "IidWindowParams",
    "default_iid_window_params",
    "generate_iid_window",
    "write_params_file",
    "read_params_file",
]

N_BINARY_FEATURES = 20
N_CAMPAIGNS = 7
DIMENSION = N_BINARY_FEATURES + N_CAMPAIGNS + 1  # +1 bias
HOURS_PER_DAY = 24.0

# Half-normal delay scale in hours per unit of the per-sample sigma score.
# The sigma score (features dotted with the delay weights) averages around
# 40, so 0.1 h/unit puts typical delays at a few hours: late enough that
# the newest arrivals are visibly mislabeled, early enough that a one-day
# deadline matures almost every label.
DEFAULT_DELAY_SIGMA_UNIT = 0.1


def _campaign_shifts(eta: float) -> np.ndarray:
    return (np.arange(1, N_CAMPAIGNS + 1) / N_CAMPAIGNS) * eta


@dataclass(frozen=True)
class SyntheticParams:
    """Ground-truth parameters of the synthetic generator."""

    feature_means: np.ndarray
    cvr_weights: np.ndarray
    delay_weights: np.ndarray
    campaign_cvr: np.ndarray
    eta: float
    samples_per_day: int = 4800
    n_days: int = 8
    delay_sigma_unit: float = DEFAULT_DELAY_SIGMA_UNIT

    def __post_init__(self):
        for name in ("feature_means", "cvr_weights", "delay_weights"):
            array = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if array.shape != (N_BINARY_FEATURES,):
                raise ValueError(f"{name} must have {N_BINARY_FEATURES} entries")
            object.__setattr__(self, name, array)
        campaign = np.ascontiguousarray(self.campaign_cvr, dtype=np.float64)
        if campaign.shape != (N_CAMPAIGNS,):
            raise ValueError(f"campaign_cvr must have {N_CAMPAIGNS} entries")
        object.__setattr__(self, "campaign_cvr", campaign)
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if not np.array_equal(campaign, _campaign_shifts(self.eta)):
            raise ValueError("campaign_cvr must equal (launch_day / 7) * eta")
        if np.any(self.feature_means <= 0) or np.any(self.feature_means >= 1):
            raise ValueError("feature_means must lie in (0, 1)")
        if np.any(self.delay_weights < 0):
            raise ValueError("delay_weights must be non-negative")
        if self.samples_per_day < 1 or self.n_days < 2:
            raise ValueError("need at least one sample per day and two days")
        if self.delay_sigma_unit < 0:
            raise ValueError("delay_sigma_unit must be non-negative")

    @property
    def train_end_hours(self) -> float:
        return (self.n_days - 1) * HOURS_PER_DAY


@dataclass(frozen=True)
class SyntheticLog:
    """One seeded draw: training days plus a test day with true labels."""

    train: EventLog
    test: EventLog
    params: SyntheticParams
    seed: int


def generate_params(seed: int, eta: float, samples_per_day: int = 4800, n_days: int = 8,
                    delay_sigma_unit: float = DEFAULT_DELAY_SIGMA_UNIT) -> SyntheticParams:
    """Draw generator parameters.

    Five feature rates come from (0.1, 0.3) and the remaining fifteen from
    (0.3, 0.7); conversion weights from (-0.5, 0.5); delay weights from
    (0, 10). Campaign shifts follow (launch_day / 7) * eta.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    rng = np.random.default_rng(seed)
    means = np.concatenate([rng.uniform(0.1, 0.3, 5), rng.uniform(0.3, 0.7, 15)])
    cvr_weights = rng.uniform(-0.5, 0.5, N_BINARY_FEATURES)
    delay_weights = rng.uniform(0.0, 10.0, N_BINARY_FEATURES)
    return SyntheticParams(
        feature_means=means,
        cvr_weights=cvr_weights,
        delay_weights=delay_weights,
        campaign_cvr=_campaign_shifts(eta),
        eta=float(eta),
        samples_per_day=samples_per_day,
        n_days=n_days,
        delay_sigma_unit=delay_sigma_unit,
    )


def _assemble_features(active: np.ndarray, campaign: np.ndarray) -> FeatureMatrix:
    """CSR matrix from a dense 0/1 feature block plus campaign one-hots."""
    n = active.shape[0]
    counts = active.sum(axis=1).astype(np.int64) + 2  # campaign + bias
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    rows, cols = np.nonzero(active)
    active_counts = counts - 2
    active_starts = np.zeros(n, dtype=np.int64)
    np.cumsum(active_counts[:-1], out=active_starts[1:])
    destinations = indptr[rows] + (np.arange(rows.size, dtype=np.int64) - active_starts[rows])
    indices[destinations] = cols
    indices[indptr[1:] - 2] = N_BINARY_FEATURES + campaign
    indices[indptr[1:] - 1] = DIMENSION - 1
    return FeatureMatrix(indices, indptr, DIMENSION, validate=False)


def generate_log(params: SyntheticParams, seed: int) -> SyntheticLog:
    """Draw the full log; the last day is the test set with true labels.

    Arrivals are uniform within each day. A sample's campaign is uniform
    over the campaigns launched by its day (campaign d launches on day d).
    Conversion follows a logistic model of the binary features plus the
    campaign shift; delays are half-normal with a per-sample scale from
    the delay weights (campaigns do not affect the delay).
    """
    rng = np.random.default_rng(seed)
    spd, days = params.samples_per_day, params.n_days
    n = spd * days
    day_index = np.repeat(np.arange(1, days + 1), spd)
    arrival = (day_index - 1) * HOURS_PER_DAY + rng.uniform(0.0, HOURS_PER_DAY, n)
    available = np.minimum(day_index, N_CAMPAIGNS)
    campaign = rng.integers(0, available)
    active = rng.random((n, N_BINARY_FEATURES)) < params.feature_means
    score = active @ params.cvr_weights + params.campaign_cvr[campaign]
    converted = rng.random(n) < expit(score)
    sigma = (active @ params.delay_weights) * params.delay_sigma_unit
    delay = np.abs(rng.standard_normal(n)) * sigma
    features = _assemble_features(active, campaign)
    log = EventLog(
        features,
        arrival,
        np.where(converted, 1, -1).astype(np.int8),
        np.where(converted, delay, np.nan),
        validate=False,
    )
    train_rows = day_index < days
    return SyntheticLog(
        train=log.subset(train_rows),
        test=log.subset(~train_rows),
        params=params,
        seed=int(seed),
    )


def make_snapshot(log: SyntheticLog, tau: float):
    """Snapshot the training days at their end.

    Returns the biased dataset, the oracle dataset, and the test day.
    """
    cfg = SnapshotConfig(log.params.train_end_hours, tau)
    biased = build_biased_dataset(log.train, cfg)
    oracle = build_oracle_dataset(log.train, cfg)
    return biased, oracle, log.test


# --- stationary window generator for the statistical checks -----------------

@dataclass(frozen=True)
class IidWindowParams:
    """Stationary single-window generator.

    ``elapsed_mean_hours`` sets the exponential elapsed-time law (truncated
    at the window length); ``delay_cap_hours`` caps every conversion delay,
    and should equal the deadline the snapshot will use so that matured
    labels are exact.
    """

    feature_means: np.ndarray
    cvr_weights: np.ndarray
    delay_sigma: np.ndarray
    window_hours: float
    elapsed_mean_hours: float
    delay_cap_hours: float

    def __post_init__(self):
        for name in ("feature_means", "cvr_weights", "delay_sigma"):
            array = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if array.ndim != 1 or array.size == 0:
                raise ValueError(f"{name} must be a non-empty vector")
            object.__setattr__(self, name, array)
        if not (
            self.feature_means.shape == self.cvr_weights.shape == self.delay_sigma.shape
        ):
            raise ValueError("parameter vectors must share one length")
        if np.any(self.feature_means <= 0) or np.any(self.feature_means >= 1):
            raise ValueError("feature_means must lie in (0, 1)")
        if np.any(self.delay_sigma < 0):
            raise ValueError("delay_sigma must be non-negative")
        if self.window_hours <= 0 or self.elapsed_mean_hours <= 0:
            raise ValueError("window and elapsed scale must be positive")
        if not 0 < self.delay_cap_hours <= self.window_hours / 2:
            raise ValueError("delay cap must lie in (0, window / 2]")

    @property
    def dimension(self) -> int:
        return self.feature_means.size + 1


def default_iid_window_params(seed: int = 0, n_features: int = 20,
                              window_hours: float = 264.0,
                              elapsed_mean_hours: float = 20.0,
                              delay_cap_hours: float = 24.0,
                              delay_scale: float = 0.5) -> IidWindowParams:
    """Convenience draw of stationary-window parameters."""
    rng = np.random.default_rng(seed)
    return IidWindowParams(
        feature_means=rng.uniform(0.1, 0.7, n_features),
        cvr_weights=rng.uniform(-0.5, 0.5, n_features),
        delay_sigma=rng.uniform(0.0, 10.0, n_features) * delay_scale,
        window_hours=window_hours,
        elapsed_mean_hours=elapsed_mean_hours,
        delay_cap_hours=delay_cap_hours,
    )


def generate_iid_window(params: IidWindowParams, n: int, seed: int) -> EventLog:
    """Draw ``n`` i.i.d. events over one observation window.

    Elapsed times (window end minus arrival) follow a truncated
    exponential; delays are half-normal, capped at ``delay_cap_hours``.
    """
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    truncation = -np.expm1(-params.window_hours / params.elapsed_mean_hours)
    elapsed = -params.elapsed_mean_hours * np.log1p(-u * truncation)
    arrival = params.window_hours - elapsed
    k = params.feature_means.size
    active = rng.random((n, k)) < params.feature_means
    converted = rng.random(n) < expit(active @ params.cvr_weights)
    sigma = active @ params.delay_sigma
    delay = np.minimum(np.abs(rng.standard_normal(n)) * sigma, params.delay_cap_hours)
    counts = active.sum(axis=1).astype(np.int64) + 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    rows, cols = np.nonzero(active)
    starts = np.zeros(n, dtype=np.int64)
    np.cumsum(counts[:-1] - 1, out=starts[1:])
    indices[indptr[rows] + (np.arange(rows.size, dtype=np.int64) - starts[rows])] = cols
    indices[indptr[1:] - 1] = k
    features = FeatureMatrix(indices, indptr, params.dimension, validate=False)
    return EventLog(
        features,
        arrival,
        np.where(converted, 1, -1).astype(np.int8),
        np.where(converted, delay, np.nan),
        validate=False,
    )


# --- parameter sidecar ------------------------------------------------------

def _format_array(array: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in array)


def write_params_file(path, params: SyntheticParams, seed: int) -> None:
    """Record the seed and every sampled parameter as ``key = value`` text."""
    lines = [
        f"seed = {int(seed)}",
        f"eta = {float(params.eta)!r}",
        f"samples_per_day = {params.samples_per_day}",
        f"n_days = {params.n_days}",
        f"delay_sigma_unit = {float(params.delay_sigma_unit)!r}",
        f"dimension = {DIMENSION}",
        f"train_end_hours = {float(params.train_end_hours)!r}",
        f"feature_means = {_format_array(params.feature_means)}",
        f"cvr_weights = {_format_array(params.cvr_weights)}",
        f"delay_weights = {_format_array(params.delay_weights)}",
        f"campaign_cvr = {_format_array(params.campaign_cvr)}",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_params_file(path) -> tuple[SyntheticParams, int]:
    """Reconstruct the parameters and seed written by write_params_file."""
    entries = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    try:
        params = SyntheticParams(
            feature_means=np.array([float(v) for v in entries["feature_means"].split(",")]),
            cvr_weights=np.array([float(v) for v in entries["cvr_weights"].split(",")]),
            delay_weights=np.array([float(v) for v in entries["delay_weights"].split(",")]),
            campaign_cvr=np.array([float(v) for v in entries["campaign_cvr"].split(",")]),
            eta=float(entries["eta"]),
            samples_per_day=int(entries["samples_per_day"]),
            n_days=int(entries["n_days"]),
            delay_sigma_unit=float(entries["delay_sigma_unit"]),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing parameter entry {exc}") from exc
    return params, int(entries.get("seed", 0))
