"""Conformal prediction sets over precomputed classifier logits.

The toolkit scores labels with an evidential non-conformity function plus
the standard baselines (base, aps, raps, las), calibrates a split-conformal
threshold, and evaluates coverage, efficiency, and adaptivity.
"""

from .conformal import (
    CalibrationResult,
    PredictionSetBatch,
    build_sets,
    calibrate,
    coverage_distribution,
)
from .dataset import (
    LogitDataset,
    SplitIndices,
    SplitSpec,
    load_logits,
    read_report,
    save_logits,
    save_report,
    split,
)
from .errors import ToolkitError
from .evidential import (
    EvidentialConfig,
    EvidentialProfile,
    evidence_from_logits,
    expected_utility,
    focal_uncertainty,
    focal_uncertainty_surprisal,
    profile,
    surprisal,
)
from .metrics import (
    SizeBins,
    StratifiedReport,
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
from .scores import (
    RapsParams,
    ScoreMatrix,
    Temperature,
    aps_scores,
    base_scores,
    compute_scores,
    ecc,
    ecp_scores,
    fit_temperature,
    las_scores,
    raps_scores,
    rho,
    scaled_softmax,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "EvidentialConfig",
    "EvidentialProfile",
    "ExperimentConfig",
    "LogitDataset",
    "PredictionSetBatch",
    "RapsParams",
    "ScoreMatrix",
    "SizeBins",
    "SplitIndices",
    "SplitSpec",
    "StratifiedReport",
    "Temperature",
    "ToolkitError",
    "aps_scores",
    "base_scores",
    "build_sets",
    "calibrate",
    "compute_scores",
    "coverage_distribution",
    "default_difficulty_bins",
    "default_size_bins",
    "difficulty_stratified",
    "ecc",
    "ecp_scores",
    "evidence_from_logits",
    "expected_utility",
    "fit_temperature",
    "focal_uncertainty",
    "focal_uncertainty_surprisal",
    "las_scores",
    "load_logits",
    "marginal_coverage",
    "mean_set_size",
    "profile",
    "raps_lambda_search",
    "raps_scores",
    "read_report",
    "rho",
    "run_experiment",
    "sat",
    "sat_size_bins",
    "save_logits",
    "save_report",
    "scaled_softmax",
    "size_stratified",
    "split",
    "sscv",
    "surprisal",
    "synth",
]
