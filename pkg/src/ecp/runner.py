"""Experiment orchestration: trials, aggregation, and report files.

One experiment sweeps (method, delta, trial). Every trial re-splits the
dataset with its own counter-based stream, refits the temperature on its
calibration side, scores, calibrates, builds validation sets, and computes
the full metric suite. Summaries report the median of per-trial means
(median-of-means); SAT-style tables report plain means over trials.

Outputs, all deterministic for a fixed config: ``per_trial.csv``,
``summary.csv``, ``size_strat.csv``, ``difficulty_strat.csv``, ``sat.csv``,
and ``reliability.json``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conformal import build_sets, calibrate
from .dataset import (
    LogitDataset,
    SplitSpec,
    load_logits,
    save_report,
    split,
    split_rng,
)
from .evidential import EvidentialConfig
from .metrics import (
    SizeBins,
    default_difficulty_bins,
    default_size_bins,
    difficulty_stratified,
    marginal_coverage,
    mean_set_size,
    sat,
    sat_size_bins,
    size_stratified,
    sscv,
)
from .scores import METHODS, RapsParams, Temperature, compute_scores, fit_temperature


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs; serializable to/from JSON."""

    logits_path: str | None = None
    labels_path: str | None = None
    methods: tuple[str, ...] = ("ecp", "base", "aps", "raps", "las")
    deltas: tuple[float, ...] = (0.1,)
    trials: int = 10
    calibration_fraction: float = 0.3
    seed: int = 0
    activation: str = "relu"
    epsilon: float = 1e-12
    k_reg: int = 5
    lam: float = 0.1
    size_bins: tuple[tuple[int, int], ...] | None = None
    difficulty_bins: tuple[tuple[int, int], ...] | None = None
    sat_bins: tuple[tuple[int, int], ...] | None = None
    randomized: bool = False
    workers: int = 1
    out_dir: str = "reports"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for d in self.deltas:
            if not 0.0 < d < 1.0:
                raise ValueError(f"delta must lie in (0, 1), got {d}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        for key in ("methods", "deltas"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return cls(**data)

    def evidential_config(self) -> EvidentialConfig:
        return EvidentialConfig(activation=self.activation, epsilon=self.epsilon)

    def raps_params(self) -> RapsParams:
        return RapsParams(k_reg=self.k_reg, lam=self.lam)


def synth(
    classes: int,
    n: int,
    separation: float,
    seed: int = 0,
    sharpness: float = 1.0,
) -> LogitDataset:
    """Synthetic overlapping-Gaussian logits with exchangeable labels.

    Each example draws a latent class c uniformly; its logits are the class
    mean (separation * one-hot simplex vertex) plus unit Gaussian noise. The
    label is sampled from the softmax of the sharpened class-mean logits, so
    with separation 0 labels are independent of the logits (accuracy 1/K)
    and with large separation the argmax recovers the label.
    """
    if classes < 2:
        raise ValueError(f"need at least two classes, got {classes}")
    if n < classes:
        raise ValueError(f"need n >= classes, got n={n}, classes={classes}")
    rng = split_rng(seed, 0, stream=7)
    latent = rng.integers(0, classes, size=n)
    logits = rng.standard_normal((n, classes))
    logits[np.arange(n), latent] += separation
    # P(label = latent) under softmax of the sharpened class-mean logits
    hot = math.exp(sharpness * separation)
    p_hot = hot / (hot + (classes - 1))
    stay = rng.random(n) < p_hot
    offset = rng.integers(1, classes, size=n)
    labels = np.where(stay, latent, (latent + offset) % classes)
    return LogitDataset.from_arrays(logits, labels)


@dataclass
class TrialOutput:
    """All records produced by one (delta, trial) unit."""

    per_trial: list[dict] = field(default_factory=list)
    size_strat: list[dict] = field(default_factory=list)
    difficulty_strat: list[dict] = field(default_factory=list)
    reliability: list[dict] = field(default_factory=list)


def _run_trial(dataset: LogitDataset, config: ExperimentConfig, delta: float, trial: int) -> TrialOutput:
    spec = SplitSpec(
        calibration_fraction=config.calibration_fraction,
        seed=config.seed,
        trial_index=trial,
    )
    idx = split(dataset, spec)
    cal, val = idx.calibration, idx.validation
    temperature = fit_temperature(dataset.logits[cal], dataset.labels[cal])
    k = dataset.n_labels
    size_bins = SizeBins(config.size_bins) if config.size_bins else default_size_bins(k)
    diff_bins = (
        SizeBins(config.difficulty_bins)
        if config.difficulty_bins
        else default_difficulty_bins(k)
    )
    adaptivity_bins = SizeBins(config.sat_bins) if config.sat_bins else sat_size_bins(k)
    out = TrialOutput()
    for method in config.methods:
        rng = split_rng(config.seed, trial, stream=1) if config.randomized else None
        matrix = compute_scores(
            method,
            dataset.logits,
            evidential_config=config.evidential_config(),
            temperature=temperature,
            raps_params=config.raps_params(),
            randomized=config.randomized and method in ("aps", "raps"),
            rng=rng,
        )
        if method == "base":
            q_hat = None
            batch = build_sets(matrix.take(val), None, dataset.labels[val], delta=delta)
        else:
            result = calibrate(
                matrix.true_label_scores(dataset.labels)[cal], delta, method, temperature
            )
            q_hat = result.q_hat
            batch = build_sets(matrix.take(val), q_hat, dataset.labels[val])
            out.reliability.append({"trial": trial, **result.as_record()})
        coverage = marginal_coverage(batch)
        size_mean = mean_set_size(batch)
        any_nonempty = bool((batch.sizes > 0).any())
        violation = sscv(batch, adaptivity_bins, delta)
        row = {
            "method": method,
            "delta": delta,
            "trial": trial,
            "n_cal": int(cal.size),
            "n_val": int(val.size),
            "temperature": temperature.value,
            "q_hat": q_hat,
            "coverage": coverage,
            "mean_size": size_mean,
            "mean_size_nonempty": mean_set_size(batch, skip_empty=True)
            if any_nonempty
            else None,
            "sscv": violation,
            "sat": sat(batch, adaptivity_bins, delta) if any_nonempty else None,
        }
        out.per_trial.append(row)
        for rec in size_stratified(batch, size_bins).as_records():
            out.size_strat.append(
                {"method": method, "delta": delta, "trial": trial, **rec}
            )
        for rec in difficulty_stratified(batch, diff_bins).as_records():
            out.difficulty_strat.append(
                {"method": method, "delta": delta, "trial": trial, **rec}
            )
    return out


def _median_of_means(values: list[float]) -> float:
    return float(np.median(np.asarray(values, dtype=np.float64)))


def _aggregate_strat(rows: list[dict], methods, deltas, bin_labels) -> list[dict]:
    """Mean count/coverage/size per (method, delta, bin) over trials."""
    out = []
    for method in methods:
        for delta in deltas:
            for label in bin_labels:
                sel = [
                    r
                    for r in rows
                    if r["method"] == method and r["delta"] == delta and r["bin"] == label
                ]
                if not sel:
                    continue
                covs = [r["coverage"] for r in sel if r["coverage"] is not None]
                szs = [r["mean_size"] for r in sel if r["mean_size"] is not None]
                out.append(
                    {
                        "method": method,
                        "delta": delta,
                        "bin": label,
                        "mean_count": float(np.mean([r["count"] for r in sel])),
                        "mean_coverage": float(np.mean(covs)) if covs else None,
                        "mean_size": float(np.mean(szs)) if szs else None,
                        "populated_trials": len(covs),
                    }
                )
    return out


def run_experiment(
    config: ExperimentConfig, dataset: LogitDataset | None = None
) -> dict[str, Path]:
    """Run the full sweep and write all report files under ``out_dir``."""
    if dataset is None:
        if not config.logits_path or not config.labels_path:
            raise ValueError("config needs logits_path and labels_path (or pass a dataset)")
        dataset = load_logits(config.logits_path, config.labels_path)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    outputs: list[TrialOutput] = []
    for delta in config.deltas:
        jobs = [(delta, t) for t in range(config.trials)]
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                outputs.extend(
                    pool.map(lambda jt: _run_trial(dataset, config, *jt), jobs)
                )
        else:
            outputs.extend(_run_trial(dataset, config, *jt) for jt in jobs)

    per_trial = [row for o in outputs for row in o.per_trial]
    size_rows = [row for o in outputs for row in o.size_strat]
    diff_rows = [row for o in outputs for row in o.difficulty_strat]
    reliability = [row for o in outputs for row in o.reliability]

    summary = []
    sat_rows = []
    for method in config.methods:
        for delta in config.deltas:
            sel = [r for r in per_trial if r["method"] == method and r["delta"] == delta]
            summary.append(
                {
                    "method": method,
                    "delta": delta,
                    "trials": len(sel),
                    "coverage": _median_of_means([r["coverage"] for r in sel]),
                    "mean_size": _median_of_means([r["mean_size"] for r in sel]),
                }
            )
            sats = [r["sat"] for r in sel if r["sat"] is not None]
            mus = [r["mean_size_nonempty"] for r in sel if r["mean_size_nonempty"] is not None]
            sat_rows.append(
                {
                    "method": method,
                    "delta": delta,
                    "mean_size_nonempty": float(np.mean(mus)) if mus else None,
                    "mean_sscv": float(np.mean([r["sscv"] for r in sel])),
                    "mean_sat": float(np.mean(sats)) if sats else None,
                }
            )

    k = dataset.n_labels
    size_labels = (
        SizeBins(config.size_bins) if config.size_bins else default_size_bins(k)
    ).labels
    diff_labels = (
        SizeBins(config.difficulty_bins)
        if config.difficulty_bins
        else default_difficulty_bins(k)
    ).labels

    paths = {
        "per_trial": out_dir / "per_trial.csv",
        "summary": out_dir / "summary.csv",
        "size_strat": out_dir / "size_strat.csv",
        "difficulty_strat": out_dir / "difficulty_strat.csv",
        "sat": out_dir / "sat.csv",
        "reliability": out_dir / "reliability.json",
    }
    save_report(per_trial, paths["per_trial"])
    save_report(summary, paths["summary"])
    save_report(
        _aggregate_strat(size_rows, config.methods, config.deltas, size_labels),
        paths["size_strat"],
    )
    save_report(
        _aggregate_strat(diff_rows, config.methods, config.deltas, diff_labels),
        paths["difficulty_strat"],
    )
    save_report(sat_rows, paths["sat"])
    save_report(reliability, paths["reliability"], fmt="json")
    return paths
