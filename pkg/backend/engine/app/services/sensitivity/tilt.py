"""Exponential tilting of conditional outcome mixtures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import logsumexp

from ..errors import InvalidParameterError
from ..mcmc import ConditionalOutcome
from ..model import Dataset


@dataclass(frozen=True, slots=True)
class Standardizer:
    """Centre and scale of the observed treated-arm outcomes."""

    center: float
    scale: float

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise InvalidParameterError("outcome scale must be positive")

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> Standardizer:
        treated = dataset.y[dataset.z == 1]
        if treated.size < 2:
            raise InvalidParameterError("at least two treated outcomes are needed to standardize")
        return cls(float(treated.mean()), float(treated.std(ddof=1)))

    def default_y_star(self) -> float:
        return self.center + self.scale


def tilted_conditional_density(
    base: ConditionalOutcome, chi_product: ArrayLike, standardizer: Standardizer
) -> ConditionalOutcome:
    """Mixture proportional to ``exp(log(chi) * y_std) * base(y)``.

    Each component N(mu, s2) moves to N(mu + t s2, s2) with t = log(chi) / scale, and its
    weight is multiplied by exp(t (mu - center) + t^2 s2 / 2) before renormalizing.
    ``chi_product`` broadcasts against the batch shape of ``base``.
    """
    chi = np.asarray(chi_product, dtype=float)
    if np.any(~(chi > 0)):
        raise InvalidParameterError("chi must be positive")
    if np.all(chi == 1.0):
        return base
    t = (np.log(chi) / standardizer.scale)[..., None]
    variances = np.broadcast_to(base.variances, base.means.shape)
    with np.errstate(divide="ignore"):
        log_w = np.log(base.weights)
    log_w = log_w + t * (base.means - standardizer.center) + 0.5 * t**2 * variances
    log_w -= logsumexp(log_w, axis=-1, keepdims=True)
    return ConditionalOutcome(
        weights=np.exp(log_w),
        means=base.means + t * variances,
        variances=base.variances,
    )
