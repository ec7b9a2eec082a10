"""Streaming per-node estimates of attack mean and variance.

The update rule is the running-average recursion

    mean'     = (t * mean + obs) / (t + 1)
    variance' = (t * variance + (obs - mean')^2) / (t + 1)

with the uniform prior mean 1/n and zero variance counting as the t=1
observation.  The variance recursion is a streaming approximation, not the
unbiased sample variance; it is kept verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BeliefState",
    "init_belief",
    "update_belief",
    "known_belief",
    "belief_error",
    "mean_closed_form",
]


@dataclass(frozen=True)
class BeliefState:
    """Immutable snapshot of the estimator; updates return a new state."""

    mean: np.ndarray
    variance: np.ndarray
    t: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.asarray(self.variance, dtype=np.float64)
        if mean.shape != var.shape or mean.ndim != 1:
            raise ValueError("mean and variance must be 1-d vectors of equal length")
        if self.t < 1:
            raise ValueError(f"slot counter must be >= 1, got {self.t}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def n(self) -> int:
        return self.mean.shape[0]


def init_belief(n: int) -> BeliefState:
    """Uniform prior: mean 1/n, variance 0, counter 1."""
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    return BeliefState(np.full(n, 1.0 / n), np.zeros(n), t=1)


def _check_binary(observed, n: int) -> np.ndarray:
    obs = np.asarray(observed, dtype=np.float64)
    if obs.shape != (n,):
        raise ValueError(f"observation must have length {n}, got shape {obs.shape}")
    if not np.all((obs == 0.0) | (obs == 1.0)):
        raise ValueError("observations must be exactly 0 or 1")
    return obs


def update_belief(b: BeliefState, observed) -> BeliefState:
    """Fold one binary observation vector into the running estimates."""
    obs = _check_binary(observed, b.n)
    t = b.t
    new_mean = (t * b.mean + obs) / (t + 1)
    new_var = (t * b.variance + (obs - new_mean) ** 2) / (t + 1)
    return BeliefState(new_mean, new_var, t + 1)


def known_belief(p) -> BeliefState:
    """Belief with the true Bernoulli statistics: mean p, variance p(1-p)."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p must be a 1-d probability vector")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return BeliefState(p.copy(), p * (1.0 - p), t=1)


def belief_error(b: BeliefState, true_p) -> tuple[np.ndarray, np.ndarray]:
    """Estimation errors against the hidden truth (harness diagnostics only)."""
    p = np.asarray(true_p, dtype=np.float64)
    return b.mean - p, b.variance - p * (1.0 - p)


def mean_closed_form(n: int, observations) -> np.ndarray:
    """Closed form of the mean recursion: (1/n + sum of observations) / (k+1)."""
    obs = np.asarray(observations, dtype=np.float64)
    k = obs.shape[0]
    return (1.0 / n + obs.sum(axis=0)) / (k + 1)
