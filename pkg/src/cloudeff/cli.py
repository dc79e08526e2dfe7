"""Command-line entry point: synth, analyze, train, evaluate, predict.

Exit codes: 0 success, 2 usage or argument error, 3 data error, 4 numerical
failure. Messages go to stderr; stdout stays empty.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, hloa, kernels, neural, svg
from .analysis import MetricError, UndefinedCorrelationError
from .dataset import DatasetError, apply_scaler, fit_scaler, load_csv, split, synthesize, write_csv
from .forest import fit_forest
from .models import (
    HLOA,
    RF,
    ConfigError,
    NetModel,
    RFModel,
    RunConfig,
    dump_json,
    load_config,
    load_model,
    save_model,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _existing(path, what):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _sibling(path, suffix):
    p = Path(path)
    return p.with_name(p.stem + suffix)


def cmd_synth(args):
    if args.rows < 1:
        raise UsageError(f"--rows must be >= 1, got {args.rows}")
    write_csv(synthesize(args.rows, args.seed, args.instructions), args.out)


def cmd_analyze(args):
    data = load_csv(_existing(args.data, "data file"))
    report = analysis.correlation_matrix(data)
    Path(args.out).write_text(report.to_text(), encoding="utf-8")
    if args.svg:
        svg.write_svg(args.svg, svg.heatmap_svg(report.columns, report.matrix))
        ranking_path = args.ranking_svg or _sibling(args.svg, ".ranking.svg")
        svg.write_svg(ranking_path, svg.ranking_svg(report.target_ranking))


def _train_rf(config, train):
    model = fit_forest(train, config.forest.forest_config(config.seed))
    preds = model.predict(train.features)
    return RFModel(model, train.feature_names, analysis.mse(train.target, preds)), None


def _train_hloa(config, train):
    scaler = fit_scaler(train)
    scaled = apply_scaler(scaler, train)
    spec = config.net.spec(train.n_features)
    objective = neural.FitnessFunction(spec, scaled)
    bound = config.optimizer.weight_bound
    space = hloa.SearchSpace.box(neural.param_count(spec), -bound, bound)
    result = hloa.optimize(objective, space, config.optimizer.hloa_config(config.seed))
    return NetModel(spec, scaler, result.x, train.feature_names, result.fitness), result


def cmd_train(args):
    data = load_csv(_existing(args.data, "data file"))
    config = load_config(_existing(args.config, "config file")) if args.config else RunConfig()
    if args.seed is not None:
        config = RunConfig.from_dict({**config.to_dict(), "seed": args.seed})
    if args.test_fraction is not None:
        config = RunConfig.from_dict({**config.to_dict(), "test_fraction": args.test_fraction})
    try:
        train, test = split(data, config.test_fraction, config.seed)
    except ValueError as exc:
        if isinstance(exc, DatasetError):
            raise
        raise UsageError(str(exc)) from None

    if args.model == RF:
        model, result = _train_rf(config, train)
    else:
        model, result = _train_hloa(config, train)
    save_model(model, args.out)

    manifest = {
        "command": "train",
        "model": args.model,
        "data": str(args.data),
        "model_file": str(args.out),
        "seed": config.seed,
        "config": config.to_dict(),
        "split": {"test_fraction": config.test_fraction, "n_train": len(train), "n_test": len(test)},
        "training_fitness": model.training_fitness,
        "kernel_backend": kernels.BACKEND,
    }
    if result is not None:
        history_path = _sibling(args.out, ".history.csv")
        history_path.write_text(result.history_csv(), encoding="utf-8")
        manifest["history"] = str(history_path)
        manifest["evaluations_used"] = result.state.evaluations_used
        manifest["generations"] = result.state.generation
        manifest["n_parameters"] = int(result.x.shape[0])
    if args.train_out:
        write_csv(train, args.train_out)
        manifest["train_file"] = str(args.train_out)
    if args.test_out:
        write_csv(test, args.test_out)
        manifest["test_file"] = str(args.test_out)
    dump_json(manifest, args.manifest or _sibling(args.out, ".manifest.json"))


def _load_model(path):
    try:
        return load_model(_existing(path, "model file"))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"{path}: not a valid model file ({exc})") from None


def _predictions(model, data):
    if tuple(model.feature_names) != data.feature_names:
        raise DatasetError(
            f"model expects columns {list(model.feature_names)}, data has {list(data.feature_names)}"
        )
    pred = np.asarray(model.predict(data), dtype=np.float64)
    if not np.all(np.isfinite(pred)):
        raise FloatingPointError("model produced non-finite predictions")
    return pred


def cmd_evaluate(args):
    data = load_csv(_existing(args.data, "data file"))
    rows = []
    for path in [args.model] + ([args.compare] if args.compare else []):
        model = _load_model(path)
        rows.append((Path(path).stem, analysis.evaluate_all(data.target, _predictions(model, data))))
    Path(args.out).write_text(analysis.comparison_csv(rows), encoding="utf-8")


def cmd_predict(args):
    data = load_csv(_existing(args.data, "data file"))
    model = _load_model(args.model)
    pred = _predictions(model, data)
    lines = ["index,actual,predicted"]
    lines += [f"{i},{float(y)!r},{float(p)!r}" for i, (y, p) in enumerate(zip(data.target, pred))]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.svg:
        svg.write_svg(args.svg, svg.line_chart_svg(data.target, pred))


def build_parser():
    parser = argparse.ArgumentParser(prog="cloudeff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic telemetry CSV")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--instructions", action="store_true", help="include the instructions_executed column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="Spearman correlation matrix and target ranking")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="text report: matrix CSV, then the ranking")
    p.add_argument("--svg", help="heatmap SVG; the ranking chart goes next to it")
    p.add_argument("--ranking-svg", help="explicit path for the ranking bar chart")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="split, fit, and save a model")
    p.add_argument("--model", required=True, choices=[RF, "hloa", HLOA])
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON run config (a previous run manifest also works)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--manifest", help="run manifest path (default: <model>.manifest.json)")
    p.add_argument("--train-out", help="write the training split as CSV")
    p.add_argument("--test-out", help="write the held-out split as CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="MSE, RMSE, MAE, MAPE and R^2 on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--compare", help="second model file for a two-row comparison")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="per-sample actual and predicted values")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", help="line chart of actual vs predicted")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "model", None) == "hloa":
        args.model = HLOA
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, UndefinedCorrelationError, MetricError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (hloa.OptimizationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        # remaining ValueErrors come from config validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
