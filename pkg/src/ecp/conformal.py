"""Split-conformal calibration, set construction, and coverage reliability.

Calibration takes the scores of the true labels on a holdout set of size n
and returns the threshold q_hat at the finite-sample rank ceil((n+1)(1-delta))
(computed as n+1-l with l = floor((n+1)*delta) so the quantile and the
reliability pair share one l). When that rank exceeds n the threshold is
+inf and every set contains all K labels, which keeps the coverage guarantee
vacuously true.

Conditioned on a fixed holdout set, the coverage over infinite validation
data follows Beta(n+1-l, l); the confidence gamma = (n-l)/(n+1) and the
uncertainty u_c = 2/(n+1) summarize that distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBeta, EmptyHoldout
from .scores import ScoreMatrix, Temperature


@dataclass(frozen=True)
class CalibrationResult:
    """Fitted threshold plus the reliability pair for one calibration run."""

    q_hat: float
    n: int
    delta: float
    method: str
    temperature: Temperature
    gamma: float
    u_c: float

    def as_record(self) -> dict:
        return {
            "method": self.method,
            "delta": self.delta,
            "n": self.n,
            "q_hat": self.q_hat,
            "temperature": self.temperature.value,
            "gamma": self.gamma,
            "u_c": self.u_c,
        }


@dataclass(frozen=True)
class PredictionSetBatch:
    """Per-example label sets with the derived quantities metrics consume.

    ``member[i, k]`` says whether label k is in example i's set; ``sizes``,
    ``hits`` (true label covered), and ``difficulty`` (true label's rank in
    descending predictive probability) are precomputed from it.
    """

    member: np.ndarray
    sizes: np.ndarray
    hits: np.ndarray
    difficulty: np.ndarray

    @property
    def n_examples(self) -> int:
        return self.member.shape[0]

    @property
    def n_labels(self) -> int:
        return self.member.shape[1]

    @property
    def sets(self) -> list[np.ndarray]:
        """Sorted label list per example."""
        return [np.flatnonzero(row) for row in self.member]


def holdout_rank(n: int, delta: float) -> tuple[int, int]:
    """Return (l, rank) with l = floor((n+1)*delta), rank = n+1-l.

    The rank equals ceil((n+1)*(1-delta)) in exact arithmetic; deriving it
    from l keeps q_hat, gamma, and the Beta parameters mutually consistent
    under floating-point rounding.
    """
    l = int(math.floor((n + 1) * delta))
    return l, (n + 1) - l


def calibrate(
    scores_true: np.ndarray,
    delta: float,
    method: str = "ecp",
    temperature: Temperature | float = 1.0,
) -> CalibrationResult:
    """Conformal calibration from the holdout scores of the true labels.

    q_hat is the rank-th smallest score (ties included naturally by sorted
    order) or +inf when the rank exceeds n. Raises ``EmptyHoldout`` for an
    empty score vector.
    """
    scores_true = np.asarray(scores_true, dtype=np.float64).ravel()
    n = scores_true.shape[0]
    if n < 1:
        raise EmptyHoldout("calibration requires at least one holdout score")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    l, rank = holdout_rank(n, delta)
    if rank > n:
        q_hat = math.inf
    else:
        q_hat = float(np.partition(scores_true, rank - 1)[rank - 1])
    if isinstance(temperature, (int, float)):
        temperature = Temperature(float(temperature))
    return CalibrationResult(
        q_hat=q_hat,
        n=n,
        delta=delta,
        method=method,
        temperature=temperature,
        gamma=(n - l) / (n + 1),
        u_c=2.0 / (n + 1),
    )


def coverage_distribution(n: int, delta: float) -> tuple[int, int]:
    """Beta parameters (n+1-l, l) of the coverage given a fixed holdout set.

    Raises ``DegenerateBeta`` when l = floor((n+1)*delta) is zero, i.e. the
    holdout set is too small for the requested delta.
    """
    if n < 1:
        raise EmptyHoldout("coverage distribution requires n >= 1")
    l, _ = holdout_rank(n, delta)
    if l < 1:
        raise DegenerateBeta(f"floor((n+1)*delta) = 0 for n={n}, delta={delta}")
    return (n + 1 - l, l)


def build_sets(
    score_matrix: ScoreMatrix,
    q_hat: float | None,
    labels: np.ndarray,
    delta: float | None = None,
) -> PredictionSetBatch:
    """Construct prediction sets {k : score_k <= q_hat} for a validation split.

    The base method ignores q_hat: its set walks labels in descending
    probability until the cumulative mass reaches 1-delta (``delta`` is then
    required). Conformal sets may be empty when q_hat is below a row's
    minimum score; q_hat = +inf yields full sets.
    """
    labels = np.asarray(labels, dtype=np.int64)
    scores, ranks = score_matrix.scores, score_matrix.ranks
    n, k = scores.shape
    if score_matrix.method == "base":
        if delta is None:
            raise ValueError("base sets require delta")
        order = np.argsort(ranks, axis=-1)
        sorted_scores = np.take_along_axis(scores, order, axis=-1)
        reached = sorted_scores >= (1.0 - delta)
        # first rank whose cumulative mass reaches 1-delta; all K if never
        cutoff = np.where(reached.any(axis=-1), reached.argmax(axis=-1), k - 1)
        member = ranks <= cutoff[:, None]
    else:
        if q_hat is None:
            raise ValueError(f"{score_matrix.method} sets require q_hat")
        member = scores <= q_hat
    idx = np.arange(n)
    return PredictionSetBatch(
        member=member,
        sizes=member.sum(axis=-1).astype(np.int64),
        hits=member[idx, labels],
        difficulty=ranks[idx, labels].astype(np.int64),
    )
