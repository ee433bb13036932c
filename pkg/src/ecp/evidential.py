"""Evidential quantities derived from classifier logits.

A non-negative activation turns each logit z_k into evidence e_k. With base
rates pi_k (uniform 1/K by default) the evidence parameterizes a Dirichlet
distribution:

    alpha_k = e_k + K * pi_k          (uniform prior: alpha_k = e_k + 1)
    alpha_0 = sum_k alpha_k = K + sum_k e_k
    p_k     = alpha_k / alpha_0       (predictive probability)
    b_k     = e_k / alpha_0           (belief mass)
    u       = K / alpha_0             (epistemic uncertainty)

so that u + sum_k b_k = 1. With zero evidence everywhere, p is uniform,
beliefs vanish, and u = 1 (complete lack of confidence). From the profile we
derive the per-label focal uncertainty u*pi_k, the surprisal -log p_k, the
focal uncertainty surprisal U_k * (-log p_k) / p_k, and the expected utility
phi_k * p_k where phi is the softmax of the logits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteInput

EPS_DEFAULT = 1e-12

_ACTIVATIONS = ("relu", "softplus", "exp")


@dataclass(frozen=True)
class EvidentialConfig:
    """Activation choice, base rates, and numeric clamping floor.

    ``base_rates`` of None means the uniform prior 1/K for whatever K the
    logits carry; an explicit vector must sum to 1 (within 1e-9) with every
    entry in (0, 1). ``epsilon`` clamps probabilities before logs and
    divisions; it must lie in (0, 1e-3].
    """

    activation: str = "relu"
    base_rates: np.ndarray | None = None
    epsilon: float = EPS_DEFAULT

    def __post_init__(self) -> None:
        if self.activation not in _ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}"
            )
        if not 0.0 < self.epsilon <= 1e-3:
            raise ValueError(f"epsilon must lie in (0, 1e-3], got {self.epsilon}")
        if self.base_rates is not None:
            rates = np.asarray(self.base_rates, dtype=np.float64)
            if rates.ndim != 1:
                raise ValueError("base_rates must be a 1-D probability vector")
            if abs(float(rates.sum()) - 1.0) > 1e-9:
                raise ValueError(f"base_rates sum to {rates.sum()}, expected 1")
            if np.any(rates <= 0.0) or np.any(rates >= 1.0):
                raise ValueError("each base rate must lie strictly in (0, 1)")
            rates.setflags(write=False)
            object.__setattr__(self, "base_rates", rates)

    def rates_for(self, k: int) -> np.ndarray:
        """Base-rate vector of length ``k`` (uniform when unset)."""
        if self.base_rates is None:
            return np.full(k, 1.0 / k)
        if self.base_rates.shape[0] != k:
            raise ValueError(
                f"base_rates have length {self.base_rates.shape[0]}, logits have K={k}"
            )
        return self.base_rates


@dataclass(frozen=True)
class EvidentialProfile:
    """All per-example evidential quantities (supports batched leading axes).

    ``ranks[k]`` is label k's position in the descending-p ordering; ties are
    broken by ascending label index, so ranks form a deterministic
    permutation of {0, ..., K-1} and the argmax of p sits at rank 0.
    """

    evidence: np.ndarray
    alpha: np.ndarray
    alpha0: np.ndarray
    p: np.ndarray
    b: np.ndarray
    u: np.ndarray
    ranks: np.ndarray
    utility: np.ndarray

    @property
    def n_labels(self) -> int:
        return self.p.shape[-1]


def _check_finite(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if not np.isfinite(z).all():
        raise NonFiniteInput("logits contain NaN or infinite values")
    return z


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shift-stabilized softmax."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=axis, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=axis, keepdims=True)


def evidence_from_logits(z: np.ndarray, config: EvidentialConfig) -> np.ndarray:
    """Map logits to non-negative evidence via the configured activation.

    relu discards ordering among negative logits; softplus and exp are
    strictly monotone. exp is capped at exp(30) to stay finite.
    """
    z = _check_finite(z)
    if config.activation == "relu":
        return np.maximum(z, 0.0)
    if config.activation == "softplus":
        # log(1 + exp(z)) = max(z, 0) + log1p(exp(-|z|)), safe for large |z|
        return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return np.exp(np.minimum(z, 30.0))


def descending_ranks(p: np.ndarray) -> np.ndarray:
    """Rank of each label in descending order of p, ties by ascending index."""
    p = np.asarray(p)
    order = np.argsort(-p, axis=-1, kind="stable")
    ranks = np.empty(p.shape, dtype=np.int64)
    np.put_along_axis(
        ranks, order, np.broadcast_to(np.arange(p.shape[-1]), p.shape), axis=-1
    )
    return ranks


def profile(
    z: np.ndarray,
    config: EvidentialConfig,
    utility_logits: np.ndarray | None = None,
) -> EvidentialProfile:
    """Compute the full evidential profile of one logit vector (or a batch).

    ``utility_logits`` lets callers derive the softmax utility phi from a
    rescaled copy of the logits (e.g. after temperature scaling) while the
    evidence path keeps the raw values; by default both use ``z``.
    """
    z = _check_finite(z)
    k = z.shape[-1]
    if k < 2:
        raise NonFiniteInput(f"need at least two labels, got K={k}")
    e = evidence_from_logits(z, config)
    pi = config.rates_for(k)
    alpha = e + k * pi
    alpha0 = alpha.sum(axis=-1)
    p = alpha / alpha0[..., None]
    b = e / alpha0[..., None]
    u = k / alpha0
    util = softmax(_check_finite(utility_logits) if utility_logits is not None else z)
    return EvidentialProfile(
        evidence=e,
        alpha=alpha,
        alpha0=alpha0,
        p=p,
        b=b,
        u=u,
        ranks=descending_ranks(p),
        utility=util,
    )


def focal_uncertainty(
    profile: EvidentialProfile, config: EvidentialConfig, k: int
) -> float | np.ndarray:
    """Share of the uncertainty assigned to label k: U_k = u * pi_k."""
    pi = config.rates_for(profile.n_labels)
    return profile.u * pi[k]


def surprisal(p_k: float | np.ndarray, epsilon: float = EPS_DEFAULT) -> float | np.ndarray:
    """Natural-log surprisal -log(p) of a probability, clamped to [eps, 1]."""
    return -np.log(np.clip(p_k, epsilon, 1.0))


def focal_uncertainty_surprisal(
    profile: EvidentialProfile, config: EvidentialConfig, k: int
) -> float | np.ndarray:
    """U_k * (-log p_k) / p_k, with the same clamped p in both places."""
    p_k = np.clip(profile.p[..., k], config.epsilon, 1.0)
    return focal_uncertainty(profile, config, k) * (-np.log(p_k)) / p_k


def expected_utility(profile: EvidentialProfile, k: int) -> float | np.ndarray:
    """phi_k * p_k: softmax utility weighted by predictive probability."""
    return profile.utility[..., k] * profile.p[..., k]
