"""Evaluation metrics: coverage, set size, stratified reports, SSCV, SAT.

SSCV is the worst absolute deviation of per-stratum coverage from 1-delta
over populated set-size strata. SAT = (1 - SSCV) / mu where mu averages the
sizes of the non-empty sets only; a perfect classifier (all singleton sets,
exact conditional coverage) scores 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import PredictionSetBatch, build_sets, calibrate
from .dataset import LogitDataset, SplitIndices
from .errors import AllBinsEmpty, AllSetsEmpty, UncoveredSize
from .scores import RapsParams, Temperature, fit_temperature, raps_scores, scaled_softmax

SIZE_BIN_TEMPLATE = ((0, 1), (2, 3), (4, 6), (7, 10), (11, 100), (101, 1000))
SAT_BIN_TEMPLATE = ((0, 1), (2, 3), (4, 10), (11, 100), (101, 1000))
DIFFICULTY_BIN_TEMPLATE = ((1, 1), (2, 3), (4, 6), (7, 10), (11, 100), (101, 1000))

# grid searched for the lambda with the smallest SSCV
LAMBDA_GRID = (1e-5, 1e-4, 8e-4, 1e-3, 15e-4, 2e-3, 1e-2, 0.1, 1.0)


@dataclass(frozen=True)
class SizeBins:
    """Ordered, disjoint, contiguous inclusive integer intervals."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.ranges:
            raise ValueError("bins must contain at least one range")
        for lo, hi in self.ranges:
            if lo > hi:
                raise ValueError(f"bin ({lo}, {hi}) has lo > hi")
        for (_, hi), (lo2, _) in zip(self.ranges, self.ranges[1:]):
            if lo2 != hi + 1:
                raise ValueError("bins must be sorted, disjoint, and contiguous")

    @property
    def labels(self) -> list[str]:
        return [f"{lo}" if lo == hi else f"{lo} to {hi}" for lo, hi in self.ranges]

    def assign(self, values: np.ndarray) -> np.ndarray:
        """Bin index of every value; raises ``UncoveredSize`` outside bins."""
        values = np.asarray(values)
        lows = np.array([lo for lo, _ in self.ranges])
        highs = np.array([hi for _, hi in self.ranges])
        idx = np.searchsorted(lows, values, side="right") - 1
        bad = (idx < 0) | (values > highs[np.clip(idx, 0, len(highs) - 1)])
        if bad.any():
            raise UncoveredSize(
                f"value {values[bad][0]} outside bins {self.ranges}"
            )
        return idx


def _clip_template(template: tuple[tuple[int, int], ...], lo_min: int, hi_max: int) -> SizeBins:
    ranges = []
    for lo, hi in template:
        if lo > hi_max:
            break
        ranges.append((max(lo, lo_min), min(hi, hi_max)))
    if ranges and ranges[-1][1] < hi_max:
        ranges[-1] = (ranges[-1][0], hi_max)
    return SizeBins(tuple(ranges))


def default_size_bins(k: int) -> SizeBins:
    """Standard set-size bins clipped to cover {0, ..., K}."""
    return _clip_template(SIZE_BIN_TEMPLATE, 0, k)


def sat_size_bins(k: int) -> SizeBins:
    """Coarser set-size bins used for the SSCV inside SAT."""
    return _clip_template(SAT_BIN_TEMPLATE, 0, k)


def default_difficulty_bins(k: int) -> SizeBins:
    """Difficulty bins over 1-indexed ranks {1, ..., K}."""
    return _clip_template(DIFFICULTY_BIN_TEMPLATE, 1, k)


@dataclass(frozen=True)
class StratifiedReport:
    """Per-bin count, covered count, coverage, and mean size.

    Coverage and mean size are NaN for empty bins; ``as_records`` maps those
    to None so reports serialize them as an undefined marker.
    """

    bins: SizeBins
    counts: np.ndarray
    covered: np.ndarray
    coverage: np.ndarray
    mean_size: np.ndarray

    def as_records(self) -> list[dict]:
        out = []
        for label, cnt, cov_n, cvg, sz in zip(
            self.bins.labels, self.counts, self.covered, self.coverage, self.mean_size
        ):
            out.append(
                {
                    "bin": label,
                    "count": int(cnt),
                    "covered": int(cov_n),
                    "coverage": None if np.isnan(cvg) else float(cvg),
                    "mean_size": None if np.isnan(sz) else float(sz),
                }
            )
        return out


def marginal_coverage(batch: PredictionSetBatch) -> float:
    """Fraction of examples whose set contains the true label."""
    return float(batch.hits.mean())


def mean_set_size(batch: PredictionSetBatch, skip_empty: bool = False) -> float:
    """Mean set size; with ``skip_empty`` the mean runs over non-empty sets."""
    sizes = batch.sizes
    if skip_empty:
        sizes = sizes[sizes > 0]
        if sizes.size == 0:
            raise AllSetsEmpty("every prediction set is empty")
    return float(sizes.mean())


def _stratify(values: np.ndarray, batch: PredictionSetBatch, bins: SizeBins) -> StratifiedReport:
    idx = bins.assign(values)
    n_bins = len(bins.ranges)
    counts = np.bincount(idx, minlength=n_bins)
    covered = np.bincount(idx, weights=batch.hits.astype(np.float64), minlength=n_bins)
    size_sum = np.bincount(idx, weights=batch.sizes.astype(np.float64), minlength=n_bins)
    with np.errstate(invalid="ignore"):
        coverage = np.where(counts > 0, covered / np.maximum(counts, 1), np.nan)
        mean_size = np.where(counts > 0, size_sum / np.maximum(counts, 1), np.nan)
    return StratifiedReport(
        bins=bins,
        counts=counts,
        covered=covered.astype(np.int64),
        coverage=coverage,
        mean_size=mean_size,
    )


def size_stratified(batch: PredictionSetBatch, bins: SizeBins) -> StratifiedReport:
    """Count and coverage of examples grouped by their set size."""
    return _stratify(batch.sizes, batch, bins)


def difficulty_stratified(batch: PredictionSetBatch, bins: SizeBins) -> StratifiedReport:
    """Count, coverage, and mean size grouped by 1-indexed true-label rank.

    Internal difficulties are 0-indexed ranks; the shift to the 1-indexed
    bins reports use happens here, at the report boundary.
    """
    return _stratify(batch.difficulty + 1, batch, bins)


def sscv(batch: PredictionSetBatch, bins: SizeBins, delta: float) -> float:
    """Worst |coverage - (1-delta)| over populated set-size strata."""
    report = size_stratified(batch, bins)
    populated = report.counts > 0
    if not populated.any():
        raise AllBinsEmpty("no stratification bin contains any example")
    return float(np.max(np.abs(report.coverage[populated] - (1.0 - delta))))


def sat(batch: PredictionSetBatch, bins: SizeBins, delta: float) -> float:
    """(1 - SSCV) / mean non-empty set size."""
    return (1.0 - sscv(batch, bins, delta)) / mean_set_size(batch, skip_empty=True)


def raps_lambda_search(
    dataset: LogitDataset,
    indices: SplitIndices,
    lambda_grid: tuple[float, ...] = LAMBDA_GRID,
    k_reg: int = 5,
    delta: float = 0.1,
    bins: SizeBins | None = None,
    temperature: Temperature | None = None,
) -> tuple[float, list[dict]]:
    """Pick the penalty with the smallest validation SSCV.

    Calibrates once per grid value on the calibration split, evaluates SSCV
    on the validation split, and returns (best_lambda, per-lambda records);
    ties go to the smallest lambda.
    """
    if not lambda_grid:
        raise ValueError("lambda grid must be non-empty")
    cal, val = indices.calibration, indices.validation
    if temperature is None:
        temperature = fit_temperature(dataset.logits[cal], dataset.labels[cal])
    probs = scaled_softmax(dataset.logits, temperature)
    if bins is None:
        bins = default_size_bins(dataset.n_labels)
    records = []
    for lam in lambda_grid:
        matrix = raps_scores(probs, RapsParams(k_reg=k_reg, lam=lam))
        result = calibrate(
            matrix.true_label_scores(dataset.labels)[cal], delta, "raps", temperature
        )
        batch = build_sets(matrix.take(val), result.q_hat, dataset.labels[val])
        records.append(
            {
                "lambda": lam,
                "sscv": sscv(batch, bins, delta),
                "coverage": marginal_coverage(batch),
                "mean_size": mean_set_size(batch),
                "q_hat": result.q_hat,
            }
        )
    best = min(records, key=lambda r: (r["sscv"], r["lambda"]))
    return best["lambda"], records
