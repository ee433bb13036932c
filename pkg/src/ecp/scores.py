"""Per-example, per-label non-conformity scores for all methods.

Five scorers share one container, ``ScoreMatrix``:

* ``ecp``  — evidential cost, row-normalized so every row's max is exactly 1
* ``base`` — cumulative softmax mass in descending-probability order
             (thresholded directly at 1-delta, never calibrated)
* ``aps``  — the same cumulative score, used with a conformal quantile
* ``raps`` — aps plus a rank penalty lambda * max(0, (rank+1) - k_reg)
* ``las``  — one minus the calibrated softmax probability

Temperature scaling applies to the softmax utility inside the evidential
cost and to every softmax-based baseline; raw logits feed the evidence path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, RankOutOfRange
from .evidential import (
    EvidentialConfig,
    EvidentialProfile,
    descending_ranks,
    profile,
    softmax,
)

METHODS = ("ecp", "base", "aps", "raps", "las")


@dataclass(frozen=True)
class Temperature:
    """Positive softmax temperature; 1.0 is the identity scaling."""

    value: float = 1.0

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise ValueError(f"temperature must be positive, got {self.value}")


@dataclass(frozen=True)
class RapsParams:
    """Rank-penalty hyperparameters; lam = 0 reduces RAPS to APS."""

    k_reg: int = 5
    lam: float = 0.1

    def __post_init__(self) -> None:
        if self.k_reg < 0:
            raise ValueError(f"k_reg must be non-negative, got {self.k_reg}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")


@dataclass(frozen=True)
class ScoreMatrix:
    """N x K scores plus the descending-probability ranks the method used."""

    method: str
    scores: np.ndarray
    ranks: np.ndarray

    def true_label_scores(self, labels: np.ndarray) -> np.ndarray:
        """Score of each example's true label (the holdout score)."""
        idx = np.arange(self.scores.shape[0])
        return self.scores[idx, np.asarray(labels, dtype=np.int64)]

    def take(self, rows: np.ndarray) -> "ScoreMatrix":
        """Row-sliced copy for one side of a split."""
        return ScoreMatrix(method=self.method, scores=self.scores[rows], ranks=self.ranks[rows])


def scaled_softmax(logits: np.ndarray, temperature: Temperature | float) -> np.ndarray:
    """Softmax of logits divided by the temperature."""
    t = temperature.value if isinstance(temperature, Temperature) else float(temperature)
    return softmax(np.asarray(logits, dtype=np.float64) / t)


def nll(logits: np.ndarray, labels: np.ndarray, t: float) -> float:
    """Mean negative log-likelihood of softmax(logits / t) at the labels."""
    z = np.asarray(logits, dtype=np.float64) / t
    shifted = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    idx = np.arange(z.shape[0])
    return float(np.mean(lse - shifted[idx, np.asarray(labels, dtype=np.int64)]))


def fit_temperature(
    logits: np.ndarray,
    labels: np.ndarray,
    lo: float = 0.05,
    hi: float = 10.0,
    tol: float = 1e-4,
) -> Temperature:
    """Fit the temperature minimizing calibration-set NLL.

    Golden-section search over [lo, hi] down to a bracket width below
    ``tol``; the NLL is unimodal in the temperature (convex in 1/t), so the
    search converges to the global minimum. The result never does worse
    than t = 1. Raises ``DegenerateInput`` when fewer than two classes are
    present.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0 or np.unique(labels).size < 2:
        raise DegenerateInput("temperature fitting needs at least two classes")
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = nll(logits, labels, c), nll(logits, labels, d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = nll(logits, labels, c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = nll(logits, labels, d)
    t_star = (a + b) / 2.0
    if nll(logits, labels, 1.0) <= nll(logits, labels, t_star):
        t_star = 1.0
    return Temperature(t_star)


def rho(k: int, r: int | np.ndarray) -> float | np.ndarray:
    """Rank scaling K / (K - r); equals 1 at rank 0, strictly increasing."""
    r = np.asarray(r)
    if np.any(r < 0) or np.any(r > k - 1):
        raise RankOutOfRange(f"rank must lie in [0, {k - 1}]")
    out = k / (k - r)
    return float(out) if out.ndim == 0 else out


def ecc(prof: EvidentialProfile, config: EvidentialConfig) -> np.ndarray:
    """Evidential classification cost of every label.

    C_k = K * u * (-pi_k * log p_k) / (phi_k * p_k^2 * (K - r_k)), with p and
    phi clamped to [epsilon, 1] so every cost is finite and non-negative.
    """
    k = prof.n_labels
    pi = config.rates_for(k)
    p = np.clip(prof.p, config.epsilon, 1.0)
    phi = np.clip(prof.utility, config.epsilon, 1.0)
    denom = phi * p * p * (k - prof.ranks)
    return k * prof.u[..., None] * (-pi * np.log(p)) / denom


def ecp_scores(
    logits: np.ndarray,
    config: EvidentialConfig | None = None,
    temperature: Temperature | float = 1.0,
) -> ScoreMatrix:
    """Evidential scores: per-row costs divided by the row maximum.

    The division uses the row's own max cost, so the maximal entry is 1.0
    exactly and the scores are invariant to the logarithm base used in the
    surprisal. The temperature only rescales the softmax utility.
    """
    config = config or EvidentialConfig()
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    t = temperature.value if isinstance(temperature, Temperature) else float(temperature)
    prof = profile(z, config, utility_logits=z / t)
    costs = ecc(prof, config)
    scores = costs / costs.max(axis=-1, keepdims=True)
    return ScoreMatrix(method="ecp", scores=scores, ranks=prof.ranks)


def _cumulative_scores(
    probs: np.ndarray,
    randomized: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative descending-probability mass per label, plus the ranks.

    Deterministic form includes the label's own probability; the randomized
    variant replaces it with a per-example uniform fraction of it.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    ranks = descending_ranks(probs)
    order = np.argsort(ranks, axis=-1)
    p_sorted = np.take_along_axis(probs, order, axis=-1)
    cum = np.cumsum(p_sorted, axis=-1)
    if randomized:
        if rng is None:
            raise ValueError("randomized scores need an explicit rng")
        u = rng.random((probs.shape[0], 1))
        cum = cum - p_sorted + u * p_sorted
    scores = np.empty_like(cum)
    np.put_along_axis(scores, order, cum, axis=-1)
    return scores, ranks


def base_scores(probs: np.ndarray) -> ScoreMatrix:
    """Cumulative softmax mass; paired with a fixed 1-delta threshold."""
    scores, ranks = _cumulative_scores(probs)
    return ScoreMatrix(method="base", scores=scores, ranks=ranks)


def aps_scores(
    probs: np.ndarray,
    randomized: bool = False,
    rng: np.random.Generator | None = None,
) -> ScoreMatrix:
    """Adaptive cumulative-probability scores."""
    scores, ranks = _cumulative_scores(probs, randomized, rng)
    return ScoreMatrix(method="aps", scores=scores, ranks=ranks)


def raps_scores(
    probs: np.ndarray,
    params: RapsParams,
    randomized: bool = False,
    rng: np.random.Generator | None = None,
) -> ScoreMatrix:
    """Regularized adaptive scores.

    Adds lambda * max(0, (rank+1) - k_reg) to the aps score, penalizing
    labels past the k_reg most probable ones; lambda = 0 reproduces
    aps_scores exactly, element-wise.
    """
    scores, ranks = _cumulative_scores(probs, randomized, rng)
    penalty = params.lam * np.maximum(0.0, (ranks + 1.0) - params.k_reg)
    return ScoreMatrix(method="raps", scores=scores + penalty, ranks=ranks)


def las_scores(probs: np.ndarray) -> ScoreMatrix:
    """One minus the calibrated softmax probability."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    return ScoreMatrix(method="las", scores=1.0 - probs, ranks=descending_ranks(probs))


def compute_scores(
    method: str,
    logits: np.ndarray,
    *,
    evidential_config: EvidentialConfig | None = None,
    temperature: Temperature | float = 1.0,
    raps_params: RapsParams | None = None,
    randomized: bool = False,
    rng: np.random.Generator | None = None,
) -> ScoreMatrix:
    """Dispatch to the scorer named by ``method``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    if method == "ecp":
        return ecp_scores(logits, evidential_config, temperature)
    probs = scaled_softmax(logits, temperature)
    if method == "base":
        return base_scores(probs)
    if method == "aps":
        return aps_scores(probs, randomized, rng)
    if method == "raps":
        return raps_scores(probs, raps_params or RapsParams(), randomized, rng)
    return las_scores(probs)
