"""Command-line interface.

Subcommands: synth, calibrate, predict, evaluate, experiment, lambda-search.
Failures exit nonzero after printing a machine-readable JSON error record to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .conformal import build_sets, calibrate
from .dataset import SplitSpec, load_logits, save_logits, save_report, split
from .errors import ToolkitError
from .evidential import EvidentialConfig
from .metrics import (
    SizeBins,
    default_difficulty_bins,
    default_size_bins,
    difficulty_stratified,
    marginal_coverage,
    mean_set_size,
    raps_lambda_search,
    sat,
    sat_size_bins,
    size_stratified,
    sscv,
)
from .runner import ExperimentConfig, run_experiment, synth
from .scores import RapsParams, Temperature, compute_scores, fit_temperature


def _parse_bins(text: str) -> tuple[tuple[int, int], ...]:
    """Parse "0-1,2-3,4-10" into inclusive integer ranges."""
    ranges = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        ranges.append((int(lo), int(hi or lo)))
    return tuple(ranges)


def _parse_grid(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(","))


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--logits", required=True, help="logit file (binary or csv)")
    p.add_argument("--labels", required=True, help="label file")


def _add_scoring_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", default="ecp", help="ecp|base|aps|raps|las")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--cal-frac", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--activation", default="relu", choices=("relu", "softplus", "exp"))
    p.add_argument("--k-reg", type=int, default=5)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--randomized", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic logit dataset")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--sharpness", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-logits", required=True)
    p.add_argument("--out-labels", required=True)

    p = sub.add_parser("calibrate", help="fit temperature and conformal threshold")
    _add_data_args(p)
    _add_scoring_args(p)
    p.add_argument("--out", help="write the calibration record here (JSON)")

    p = sub.add_parser("predict", help="emit prediction sets for new logits")
    p.add_argument("--logits", required=True)
    p.add_argument("--calibration", required=True, help="JSON from the calibrate command")
    p.add_argument("--out", required=True, help="CSV of per-example sets")

    p = sub.add_parser("evaluate", help="score one calibrated method on labeled data")
    _add_data_args(p)
    p.add_argument("--calibration", required=True)
    p.add_argument("--bins", type=_parse_bins, default=None)
    p.add_argument("--out", help="directory for stratified reports")

    p = sub.add_parser("experiment", help="run the full multi-trial protocol")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--logits")
    p.add_argument("--labels")
    p.add_argument("--method", action="append", help="repeatable or comma-separated")
    p.add_argument("--delta", action="append", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--cal-frac", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--activation", choices=("relu", "softplus", "exp"))
    p.add_argument("--k-reg", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--bins", type=_parse_bins)
    p.add_argument("--randomized", action="store_true", default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("lambda-search", help="pick the RAPS penalty minimizing SSCV")
    _add_data_args(p)
    p.add_argument("--k-reg", type=int, default=5)
    p.add_argument("--lambda-grid", type=_parse_grid, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--cal-frac", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=_parse_bins, default=None)
    p.add_argument("--out", help="write the per-lambda report here")
    return parser


def _cmd_synth(args) -> int:
    ds = synth(args.classes, args.n, args.separation, args.seed, args.sharpness)
    save_logits(ds, args.out_logits, args.out_labels)
    print(json.dumps({"n": ds.n_examples, "k": ds.n_labels}))
    return 0


def _calibration_record(args, dataset) -> dict:
    spec = SplitSpec(args.cal_frac, args.seed, args.trial)
    idx = split(dataset, spec)
    cal = idx.calibration
    temperature = fit_temperature(dataset.logits[cal], dataset.labels[cal])
    config = EvidentialConfig(activation=args.activation)
    matrix = compute_scores(
        args.method,
        dataset.logits,
        evidential_config=config,
        temperature=temperature,
        raps_params=RapsParams(args.k_reg, args.lam),
        randomized=args.randomized and args.method in ("aps", "raps"),
        rng=np.random.Generator(np.random.Philox(args.seed)) if args.randomized else None,
    )
    record = {
        "method": args.method,
        "delta": args.delta,
        "activation": args.activation,
        "k_reg": args.k_reg,
        "lambda": args.lam,
        "seed": args.seed,
        "trial": args.trial,
        # provenance only: predict always rescores deterministically
        "randomized": args.randomized,
        "temperature": temperature.value,
    }
    if args.method == "base":
        record.update({"n": int(cal.size), "q_hat": None})
    else:
        result = calibrate(
            matrix.true_label_scores(dataset.labels)[cal], args.delta, args.method, temperature
        )
        record.update(
            {"n": result.n, "q_hat": result.q_hat, "gamma": result.gamma, "u_c": result.u_c}
        )
    return record


def _cmd_calibrate(args) -> int:
    dataset = load_logits(args.logits, args.labels)
    record = _calibration_record(args, dataset)
    text = json.dumps(record, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _sets_from_record(record: dict, logits, labels=None):
    config = EvidentialConfig(activation=record["activation"])
    matrix = compute_scores(
        record["method"],
        logits,
        evidential_config=config,
        temperature=Temperature(record["temperature"]),
        raps_params=RapsParams(record["k_reg"], record["lambda"]),
    )
    n = matrix.scores.shape[0]
    y = labels if labels is not None else np.zeros(n, dtype=np.int64)
    return build_sets(matrix, record["q_hat"], y, delta=record["delta"])


def _cmd_predict(args) -> int:
    record = json.loads(Path(args.calibration).read_text())
    logits = _load_logits_only(args.logits)
    batch = _sets_from_record(record, logits)
    rows = [
        {"example": i, "size": int(batch.sizes[i]), "labels": " ".join(map(str, s))}
        for i, s in enumerate(batch.sets)
    ]
    save_report(rows, args.out)
    print(json.dumps({"examples": len(rows), "mean_size": float(batch.sizes.mean())}))
    return 0


def _load_logits_only(path: str) -> np.ndarray:
    """Load a logit matrix without labels (for predict)."""
    from .dataset import MAGIC_LOGITS, _HEADER, _parse_float_rows, _read_header

    p = Path(path)
    if p.suffix.lower() in (".csv", ".txt"):
        return _parse_float_rows(p)
    raw = p.read_bytes()
    _, n, k = _read_header(raw, MAGIC_LOGITS, p)
    return np.frombuffer(raw[4 + _HEADER.size :], dtype="<f4").reshape(n, k).astype(np.float64)


def _cmd_evaluate(args) -> int:
    record = json.loads(Path(args.calibration).read_text())
    dataset = load_logits(args.logits, args.labels)
    batch = _sets_from_record(record, dataset.logits, dataset.labels)
    k = dataset.n_labels
    size_bins = SizeBins(args.bins) if args.bins else default_size_bins(k)
    diff_bins = default_difficulty_bins(k)
    delta = record["delta"]
    metrics = {
        "method": record["method"],
        "delta": delta,
        "coverage": marginal_coverage(batch),
        "mean_size": mean_set_size(batch),
        "sscv": sscv(batch, sat_size_bins(k), delta),
    }
    if (batch.sizes > 0).any():
        metrics["sat"] = sat(batch, sat_size_bins(k), delta)
    if args.out:
        out = Path(args.out)
        save_report([metrics], out / "metrics.json", fmt="json")
        save_report(size_stratified(batch, size_bins).as_records(), out / "size_strat.csv")
        save_report(
            difficulty_stratified(batch, diff_bins).as_records(),
            out / "difficulty_strat.csv",
        )
    print(json.dumps(metrics, indent=2))
    return 0


def _cmd_experiment(args) -> int:
    methods = None
    if args.method:
        methods = tuple(m for item in args.method for m in item.split(","))
    overrides = {
        "logits_path": args.logits,
        "labels_path": args.labels,
        "methods": methods,
        "deltas": tuple(args.delta) if args.delta else None,
        "trials": args.trials,
        "calibration_fraction": args.cal_frac,
        "seed": args.seed,
        "activation": args.activation,
        "k_reg": args.k_reg,
        "lam": args.lam,
        "size_bins": args.bins,
        "randomized": args.randomized,
        "workers": args.workers,
        "out_dir": args.out,
    }
    if args.config:
        config = ExperimentConfig.from_file(args.config, **overrides)
    else:
        config = ExperimentConfig(
            **{k: v for k, v in overrides.items() if v is not None}
        )
    paths = run_experiment(config)
    print(json.dumps({name: str(path) for name, path in paths.items()}, indent=2))
    return 0


def _cmd_lambda_search(args) -> int:
    dataset = load_logits(args.logits, args.labels)
    idx = split(dataset, SplitSpec(args.cal_frac, args.seed, 0))
    kwargs = {"k_reg": args.k_reg, "delta": args.delta}
    if args.lambda_grid is not None:
        kwargs["lambda_grid"] = args.lambda_grid
    if args.bins:
        kwargs["bins"] = SizeBins(args.bins)
    best, records = raps_lambda_search(dataset, idx, **kwargs)
    if args.out:
        save_report(records, args.out)
    print(json.dumps({"best_lambda": best, "grid": records}, indent=2))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
    "lambda-search": _cmd_lambda_search,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ToolkitError, ValueError, OSError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
