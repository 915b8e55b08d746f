"""Categorical draws and stick-breaking helpers for the truncated DP mixtures."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

# Stick fractions are kept strictly inside (0, 1) so log(1 - w') stays finite.
STICK_EPS = 1e-12


def categorical_from_logits(rng: np.random.Generator, log_weights: NDArray) -> NDArray:
    """One label per row of an ``(n, L)`` array of unnormalized log weights."""
    log_weights = np.atleast_2d(log_weights)
    probs = np.exp(log_weights - logsumexp(log_weights, axis=1, keepdims=True))
    cumulative = np.cumsum(probs, axis=1)
    draws = rng.uniform(size=(log_weights.shape[0], 1)) * cumulative[:, -1:]
    labels = (cumulative < draws).sum(axis=1)
    return np.minimum(labels, log_weights.shape[1] - 1)


def cluster_counts(labels: NDArray, n_clusters: int) -> NDArray:
    return np.bincount(labels, minlength=n_clusters)


def sample_stick_fractions(
    rng: np.random.Generator, counts: NDArray, concentration: float
) -> NDArray:
    """w'_k ~ Beta(1 + n_k, concentration + sum_{q>k} n_q); the last fraction is 1."""
    counts = np.asarray(counts, dtype=float)
    tail = np.cumsum(counts[::-1])[::-1] - counts
    fractions = rng.beta(1.0 + counts[:-1], concentration + tail[:-1])
    fractions = np.clip(fractions, STICK_EPS, 1.0 - STICK_EPS)
    return np.append(fractions, 1.0)


def stick_weights(fractions: NDArray) -> NDArray:
    """w_k = w'_k prod_{h<k} (1 - w'_h)."""
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - fractions[:-1])))
    weights = fractions * remaining
    return weights / weights.sum()


def sample_concentration(
    rng: np.random.Generator,
    fractions: NDArray,
    prior_shape: float,
    prior_rate: float,
) -> float:
    """Conjugate Gamma update of the DP mass given the truncated sticks."""
    n_free = fractions.size - 1
    rate = prior_rate - np.sum(np.log1p(-fractions[:-1]))
    return float(rng.gamma(prior_shape + n_free, 1.0 / rate))
