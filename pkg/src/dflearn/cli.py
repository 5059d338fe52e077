"""Command-line interface.

Subcommands: synth-gen, train, eval, sweep, criteo-prep, criteo-run. All
outputs are text (CSV or key = value); exit status is 0 on success and
nonzero on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import dfm as dfm_module
from . import fsiw as fsiw_module
from .core import SnapshotConfig, build_biased_dataset, build_oracle_dataset, read_event_log, write_event_log
from .criteo import DIMENSION as CRITEO_DIMENSION
from .criteo import prepare_stream, write_prep_meta
from .harness import (
    CRITEO_TRAIN_WEEKS,
    CSV_HEADER,
    DEFAULT_CRITEO_TAU_HOURS,
    DEFAULT_SWEEP_EPOCHS,
    DEFAULT_SWEEP_LAMBDA,
    DEFAULT_SWEEP_METHODS,
    DEFAULT_TAU_HOURS,
    aggregate_summary_lines,
    evaluate_probabilities,
    run_criteo_experiment,
    run_synthetic_sweep,
    write_criteo_csv,
    write_sweep_csv,
)
from .optim import (
    CRITEO_LAMBDA_GRID,
    METHODS,
    TrainConfig,
    TrainData,
    load_model,
    log_uniform_candidates,
    read_model_method,
    save_model,
    select_lambda,
    train,
)
from .synthetic import generate_log, generate_params, read_params_file, write_params_file

# Published full-scale results for the 7-day protocol on the public
# conversion log (3-week training windows, ~6M rows per window). Desk-scale
# runs cannot reproduce them; they are recorded for reference only.
# Rows: method, day ("average" for the 7-day mean), nll, acc, auc_pr.
FULL_SCALE_REFERENCE = (
    ("nndf", "54", 0.265, 0.935, 0.817), ("nndf", "55", 0.269, 0.929, 0.829),
    ("nndf", "56", 0.283, 0.917, 0.842), ("nndf", "57", 0.326, 0.888, 0.815),
    ("nndf", "58", 0.653, 0.763, 0.484), ("nndf", "59", 0.421, 0.781, 0.904),
    ("nndf", "60", 0.233, 0.983, 0.994), ("nndf", "average", 0.347, 0.888, 0.810),
    ("bl", "54", 0.290, 0.936, 0.864), ("bl", "55", 0.314, 0.929, 0.859),
    ("bl", "56", 0.355, 0.917, 0.838), ("bl", "57", 0.440, 0.888, 0.797),
    ("bl", "58", 0.589, 0.763, 0.681), ("bl", "59", 0.340, 0.800, 0.975),
    ("bl", "60", 0.281, 0.826, 0.990), ("bl", "average", 0.371, 0.867, 0.859),
    ("tw", "54", 0.260, 0.936, 0.883), ("tw", "55", 0.284, 0.929, 0.878),
    ("tw", "56", 0.324, 0.917, 0.858), ("tw", "57", 0.416, 0.888, 0.822),
    ("tw", "58", 0.603, 0.763, 0.668), ("tw", "59", 0.518, 0.763, 0.847),
    ("tw", "60", 0.472, 0.753, 0.923), ("tw", "average", 0.408, 0.852, 0.846),
    ("putw", "54", 0.320, 0.889, 0.889), ("putw", "55", 0.368, 0.928, 0.874),
    ("putw", "56", 0.335, 0.917, 0.856), ("putw", "57", 0.441, 0.888, 0.809),
    ("putw", "58", 0.570, 0.762, 0.617), ("putw", "59", 0.662, 0.763, 0.607),
    ("putw", "60", 0.735, 0.753, 0.611), ("putw", "average", 0.487, 0.845, 0.802),
    ("fsiw", "54", 0.274, 0.936, 0.869), ("fsiw", "55", 0.300, 0.929, 0.862),
    ("fsiw", "56", 0.340, 0.917, 0.840), ("fsiw", "57", 0.374, 0.908, 0.827),
    ("fsiw", "58", 0.582, 0.763, 0.688), ("fsiw", "59", 0.208, 0.958, 0.995),
    ("fsiw", "60", 0.142, 0.995, 0.993), ("fsiw", "average", 0.312, 0.916, 0.868),
    ("dfm", "54", 0.280, 0.936, 0.867), ("dfm", "55", 0.320, 0.929, 0.860),
    ("dfm", "56", 0.356, 0.917, 0.839), ("dfm", "57", 0.444, 0.888, 0.794),
    ("dfm", "58", 0.589, 0.763, 0.684), ("dfm", "59", 0.315, 0.821, 0.979),
    ("dfm", "60", 0.256, 0.840, 0.992), ("dfm", "average", 0.365, 0.872, 0.858),
    ("oracle", "54", 0.070, 0.998, 1.000), ("oracle", "55", 0.068, 0.999, 1.000),
    ("oracle", "56", 0.069, 0.999, 1.000), ("oracle", "57", 0.078, 0.999, 0.999),
    ("oracle", "58", 0.144, 0.998, 0.997), ("oracle", "59", 0.118, 0.996, 0.995),
    ("oracle", "60", 0.110, 0.995, 0.994), ("oracle", "average", 0.093, 0.998, 0.998),
)


def _add_train_options(parser: argparse.ArgumentParser, default_epochs: int = 2000) -> None:
    parser.add_argument("--learning-rate", type=float, default=None,
                        help="gradient step size (default 0.5 full batch, 0.05 mini-batch)")
    parser.add_argument("--max-epochs", type=int, default=default_epochs)
    parser.add_argument("--grad-tolerance", type=float, default=1e-6)
    parser.add_argument("--batch-size", type=int, default=None,
                        help="mini-batch rows; omit for full batch")
    parser.add_argument("--nn-mode", choices=("plain", "ascent"), default="plain")
    parser.add_argument("--train-seed", type=int, default=0)
    parser.add_argument("--omega", type=float, default=0.5,
                        help="positive-unlabeled mixing weight for pnutw")


def _config_from_args(args, l2_lambda: float = 0.0) -> TrainConfig:
    if args.learning_rate is not None:
        learning_rate = args.learning_rate
    else:
        learning_rate = 0.05 if args.batch_size else 0.5
    return TrainConfig(
        learning_rate=learning_rate,
        l2_lambda=l2_lambda,
        max_epochs=args.max_epochs,
        grad_tolerance=args.grad_tolerance,
        batch_size=args.batch_size,
        nn_mode=args.nn_mode,
        seed=args.train_seed,
    )


def _parse_lambda(text: str) -> float | None:
    """A float pins the regularization; 'auto' selects by cross-validation."""
    if text == "auto":
        return None
    value = float(text)
    if value < 0:
        raise ValueError("lambda must be non-negative")
    return value


def _cmd_synth_gen(args) -> int:
    params = generate_params(args.seed, args.eta)
    log = generate_log(params, args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_event_log(os.path.join(args.out, "train.log"), log.train)
    write_event_log(os.path.join(args.out, "test.log"), log.test)
    write_params_file(os.path.join(args.out, "params.txt"), params, args.seed)
    print(f"wrote {len(log.train)} train and {len(log.test)} test events to {args.out}")
    return 0


def _cmd_train(args) -> int:
    params, _ = read_params_file(os.path.join(args.data, "params.txt"))
    from .synthetic import DIMENSION as SYNTH_DIMENSION

    events = read_event_log(os.path.join(args.data, "train.log"), SYNTH_DIMENSION)
    cfg = SnapshotConfig(params.train_end_hours, args.tau)
    biased = build_biased_dataset(events, cfg)
    oracle = build_oracle_dataset(events, cfg)
    data = TrainData(
        biased=biased,
        oracle=oracle,
        labeled_features=events.features,
        labeled_classes=events.converted,
        omega=args.omega,
    )
    pinned = _parse_lambda(getattr(args, "lambda"))
    config = _config_from_args(args, l2_lambda=pinned if pinned is not None else 0.0)
    if args.method == "fsiw":
        models = fsiw_module.fit_weight_models(
            oracle, config, elapsed_scale=params.train_end_hours - args.tau
        )
        data.fsiw_weights = fsiw_module.weights_for(biased, models)
    if pinned is None:
        candidates = log_uniform_candidates(seed=args.train_seed)
        chosen = select_lambda(args.method, data, candidates, config=config)
        config = _config_from_args(args, l2_lambda=chosen)
        if args.method == "fsiw":
            models = fsiw_module.fit_weight_models(
                oracle, config, elapsed_scale=params.train_end_hours - args.tau
            )
            data.fsiw_weights = fsiw_module.weights_for(biased, models)
        print(f"selected lambda {chosen!r}", file=sys.stderr)
    result = train(args.method, data, config)
    if args.method == "dfm":
        dfm_module.save_model(args.model_out, result.model)
    else:
        save_model(args.model_out, result.model, args.method)
    final = result.objective_trace[-1] if result.objective_trace else float("nan")
    print(
        f"trained {args.method}: {result.n_epochs} epochs, "
        f"converged={result.converged}, final objective {final:.6f}"
    )
    return 0


def _cmd_eval(args) -> int:
    method = read_model_method(args.model)
    if method == "dfm":
        model = dfm_module.load_model(args.model)
    else:
        model, _ = load_model(args.model)
    test = read_event_log(args.test, model.dimension)
    report = evaluate_probabilities(
        model.probabilities(test.features), test.converted, method, args.oracle_nll
    )
    rll = "" if report.rll is None else repr(report.rll)
    print(CSV_HEADER)
    print(f"{method},,,{report.nll!r},{report.acc!r},{report.auc_pr!r},{rll},ok")
    return 0


def _comma_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _comma_methods(text: str) -> list[str]:
    methods = [tok.strip() for tok in text.split(",") if tok.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected among {METHODS}")
    return methods


def _cmd_sweep(args) -> int:
    etas = _comma_floats(args.etas)
    methods = _comma_methods(args.methods)
    pinned = _parse_lambda(getattr(args, "lambda"))
    config = _config_from_args(
        args, l2_lambda=pinned if pinned is not None else DEFAULT_SWEEP_LAMBDA
    )
    candidates = log_uniform_candidates(seed=args.base_seed) if pinned is None else None
    result = run_synthetic_sweep(
        etas,
        args.trials,
        methods,
        tau=args.tau,
        config=config,
        base_seed=args.base_seed,
        lambda_candidates=candidates,
    )
    write_sweep_csv(args.out, result)
    for line in aggregate_summary_lines(result):
        print(line)
    print(f"wrote {len(result.cells)} rows to {args.out}")
    return 0


def _cmd_criteo_prep(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    stats = prepare_stream(getattr(args, "in"), os.path.join(args.out, "events.log"))
    write_prep_meta(os.path.join(args.out, "meta.txt"), stats)
    print(
        f"prepared {stats.rows_written} rows ({stats.rows_quarantined} quarantined) "
        f"into {args.out}; {stats.distinct_indices} distinct feature indices"
    )
    return 0


def _cmd_criteo_run(args) -> int:
    if args.reference:
        print("# full-scale reference results; not reproducible at desk scale")
        print(CSV_HEADER)
        for method, day, nll, acc, auc in FULL_SCALE_REFERENCE:
            print(f"{method},,{day},{nll},{acc},{auc},,reference")
        return 0
    if args.data is None or args.test_day is None or args.out is None:
        raise ValueError("criteo-run needs --data, --test-day and --out (or --reference)")
    events = read_event_log(os.path.join(args.data, "events.log"), CRITEO_DIMENSION)
    methods = _comma_methods(args.methods)
    config = _config_from_args(args, l2_lambda=0.0)
    grid = _comma_floats(args.lambda_grid)
    reports = run_criteo_experiment(
        events, [args.test_day], methods, tau=args.tau, config=config, lambda_grid=grid
    )
    write_criteo_csv(args.out, reports, args.tau)
    for r in reports:
        nll = "" if r.nll is None else f"{r.nll:.6f}"
        print(f"day {r.day} {r.method}: status={r.status} nll={nll}")
    print(f"wrote {len(reports)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dflearn",
        description="Delayed-feedback classifier training and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-gen", help="generate a seeded synthetic log directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth_gen)

    p = sub.add_parser("train", help="train one method on a generated data directory")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU_HOURS)
    p.add_argument("--lambda", default="0.0001",
                   help="regularization strength, or 'auto' for cross-validated search")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    _add_train_options(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a test event log")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--format", choices=("csv",), default="csv")
    p.add_argument("--oracle-nll", type=float, default=None,
                   help="reference log loss for the rll column")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="run the shift-parameter sweep and write CSV")
    p.add_argument("--etas", default="0,0.25,0.5,1,2,4")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--methods", default=",".join(DEFAULT_SWEEP_METHODS))
    p.add_argument("--tau", type=float, default=DEFAULT_TAU_HOURS)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--lambda", default=repr(DEFAULT_SWEEP_LAMBDA),
                   help="regularization for every method, or 'auto'")
    p.add_argument("--out", required=True)
    _add_train_options(p, default_epochs=DEFAULT_SWEEP_EPOCHS)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("criteo-prep", help="hash a raw conversion log into an event-log directory")
    p.add_argument("--in", required=True, dest="in")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_criteo_prep)

    p = sub.add_parser(
        "criteo-run",
        help=f"per-day protocol on a prepared directory ({CRITEO_TRAIN_WEEKS}-week training windows)",
    )
    p.add_argument("--data")
    p.add_argument("--test-day", type=int)
    p.add_argument("--methods", default="nndf,bl,tw,putw,fsiw,dfm,oracle")
    p.add_argument("--tau", type=float, default=DEFAULT_CRITEO_TAU_HOURS)
    p.add_argument("--lambda-grid", default=",".join(repr(v) for v in CRITEO_LAMBDA_GRID))
    p.add_argument("--out")
    p.add_argument("--reference", action="store_true",
                   help="print the recorded full-scale reference table and exit")
    _add_train_options(p)
    p.set_defaults(func=_cmd_criteo_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
