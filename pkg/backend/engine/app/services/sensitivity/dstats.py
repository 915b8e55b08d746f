"""Standardized distances of unit-level mediator changes."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..distributions import cholesky_or_raise, mahalanobis
from ..effects import subsets
from ..errors import InvalidParameterError

logger = logging.getLogger(__name__)


def difference_covariance(potential: ArrayLike) -> NDArray:
    """Within-unit covariance of M(1) - M(0), pooled over units.

    ``potential`` holds shared counterfactual draws of shape ``(n, n_mc, 2K)``.
    """
    potential = np.asarray(potential, dtype=float)
    if potential.ndim != 3 or potential.shape[-1] % 2:
        raise InvalidParameterError("expected potential mediators of shape (n, n_mc, 2K)")
    n, n_mc, dim = potential.shape
    if n_mc < 2:
        raise InvalidParameterError("at least two Monte Carlo draws per unit are needed")
    k = dim // 2
    diffs = potential[..., k:] - potential[..., :k]
    centred = diffs - diffs.mean(axis=1, keepdims=True)
    cov = np.einsum("umi,umj->ij", centred, centred) / (n * (n_mc - 1))
    cov = 0.5 * (cov + cov.T)
    cholesky_or_raise(cov, "difference covariance")
    return cov


def difference_correlation(cov: ArrayLike) -> NDArray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def subset_threshold(corr: NDArray, subset: tuple[int, ...], epsilon: float) -> float:
    """epsilon * sqrt(1' R_S 1): sqrt(2 + 2r) for a pair, sqrt(3 + 2 sum r) for a triple."""
    cols = list(subset)
    return float(epsilon * np.sqrt(corr[np.ix_(cols, cols)].sum()))


@dataclass(frozen=True, slots=True, eq=False)
class SubsetDistance:
    """Distances of every unit's change on one mediator subset, with the subset's threshold."""

    subset: tuple[int, ...]
    distance: NDArray
    threshold: float

    @property
    def exceeds(self) -> NDArray:
        return self.distance >= self.threshold


def d_statistics(
    delta_m: ArrayLike, cov: ArrayLike, epsilon: float
) -> dict[tuple[int, ...], SubsetDistance]:
    """Mahalanobis distance of each unit's change for every nonempty mediator subset."""
    if not (epsilon > 0):
        raise InvalidParameterError("epsilon must be positive")
    delta_m = np.atleast_2d(np.asarray(delta_m, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    k = delta_m.shape[1]
    if cov.shape != (k, k):
        raise InvalidParameterError(f"difference covariance must be {k}x{k}")
    corr = difference_correlation(cov)
    out = {}
    for subset in subsets(k):
        cols = list(subset)
        distance = np.atleast_1d(mahalanobis(delta_m[:, cols], cov[np.ix_(cols, cols)]))
        out[subset] = SubsetDistance(subset, distance, subset_threshold(corr, subset, epsilon))
    return out
