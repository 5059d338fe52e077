"""Training binary classifiers under delayed feedback.

Recent samples in a click log are provisionally negative until their
conversion arrives, so a snapshot taken for training is biased. This
package builds the snapshot datasets, implements a corrected convex
empirical risk (plus a non-negative clamped variant) together with the
standard baselines, and ships the synthetic-study and conversion-log
experiment harnesses behind a CLI.
"""

from .backend import BACKEND
from .core import (
    BiasedDataset,
    BiasedExample,
    ClassPriors,
    ClickEvent,
    EventLog,
    FeatureMatrix,
    FeatureVector,
    OracleDataset,
    OracleExample,
    SnapshotConfig,
    build_biased_dataset,
    build_oracle_dataset,
    classify,
    estimate_priors,
    predict,
    read_event_log,
    temporal_label,
    write_event_log,
)
from .dfm import DfmModel, dfm_nll, train_dfm
from .fsiw import FsiwWeights, fit_weight_models, weights_for
from .harness import EvalReport, SweepResult, run_criteo_experiment, run_synthetic_sweep
from .metrics import metric_acc, metric_auc_pr, metric_nll, metric_rll
from .optim import (
    METHODS,
    DivergedError,
    LinearModel,
    TrainConfig,
    TrainData,
    TrainResult,
    grad_convdf,
    grad_nndf,
    l2_penalty,
    select_lambda,
    train,
)
from .risk import (
    LossKind,
    RiskParts,
    composite_loss,
    logistic_loss,
    oracle_risk,
    risk_bl,
    risk_convdf,
    risk_fsiw,
    risk_nndf,
    risk_parts,
    risk_pnutw,
    risk_putw,
    risk_tw,
    zero_one_loss,
)
from .synthetic import (
    IidWindowParams,
    SyntheticLog,
    SyntheticParams,
    generate_iid_window,
    generate_log,
    generate_params,
    make_snapshot,
)

__version__ = "0.1.0"
