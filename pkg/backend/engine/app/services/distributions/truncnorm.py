"""Normal distributions truncated from below.

The mixture kernels are normals on ``[lower, inf)``. Functions here are
vectorized over any broadcastable ``(mu, sd, lower)``. ``TruncatedNormal``
wraps one parameter set with validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import log_ndtr, ndtr, ndtri

from ..errors import InvalidParameterError

# Standardized lower bound above which inverse-CDF sampling loses precision.
TAIL_SWITCH = 5.0
CDF_CLAMP = 1e-12

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def standardized_bound(mu: ArrayLike, sd: ArrayLike, lower: ArrayLike) -> NDArray:
    with np.errstate(invalid="ignore"):
        return (np.asarray(lower, dtype=float) - mu) / sd


def truncnorm_logpdf(t: ArrayLike, mu: ArrayLike, sd: ArrayLike, lower: ArrayLike) -> NDArray:
    t = np.asarray(t, dtype=float)
    z = (t - mu) / sd
    a = standardized_bound(mu, sd, lower)
    out = -0.5 * z * z - _LOG_SQRT_2PI - np.log(sd) - log_ndtr(-a)
    return np.where(t >= lower, out, -np.inf)


def truncnorm_pdf(t: ArrayLike, mu: ArrayLike, sd: ArrayLike, lower: ArrayLike) -> NDArray:
    return np.exp(truncnorm_logpdf(t, mu, sd, lower))


def truncnorm_cdf(t: ArrayLike, mu: ArrayLike, sd: ArrayLike, lower: ArrayLike) -> NDArray:
    t = np.asarray(t, dtype=float)
    b = (t - mu) / sd
    a = standardized_bound(mu, sd, lower)
    # left branch keeps relative precision for small cdf values, right branch near 1
    with np.errstate(invalid="ignore", divide="ignore"):
        left = (ndtr(b) - ndtr(a)) / ndtr(-a)
        right = -np.expm1(log_ndtr(-b) - log_ndtr(-a))
    out = np.where(b < 0.0, left, right)
    return np.clip(np.where(t <= lower, 0.0, out), 0.0, 1.0)


def truncnorm_ppf(u: ArrayLike, mu: ArrayLike, sd: ArrayLike, lower: ArrayLike) -> NDArray:
    u = np.asarray(u, dtype=float)
    a = standardized_bound(mu, sd, lower)
    upper_mass = ndtr(-a)
    survival = (1.0 - u) * upper_mass
    with np.errstate(invalid="ignore"):
        from_left = ndtri(ndtr(a) + u * upper_mass)
        from_right = -ndtri(survival)
    b = np.where(survival < 0.5, from_right, from_left)
    return np.maximum(mu + sd * b, lower)


def sample_truncnorm(
    rng: np.random.Generator,
    mu: ArrayLike,
    sd: ArrayLike,
    lower: ArrayLike,
    size: int | tuple[int, ...] | None = None,
) -> NDArray:
    """Draw from N(mu, sd^2) restricted to [lower, inf).

    Inverse transform when the standardized bound is at most ``TAIL_SWITCH``;
    Rayleigh proposals with rejection (Marsaglia's tail method) beyond it.
    """
    mu, sd, lower = np.broadcast_arrays(
        np.asarray(mu, dtype=float), np.asarray(sd, dtype=float), np.asarray(lower, dtype=float)
    )
    shape = mu.shape if size is None else (size if isinstance(size, tuple) else (size,))
    mu, sd, lower = (np.broadcast_to(arr, shape) for arr in (mu, sd, lower))
    a = standardized_bound(mu, sd, lower)

    z = np.empty(shape)
    body = ~(a > TAIL_SWITCH)
    if np.any(body):
        u = rng.uniform(size=int(body.sum()))
        z[body] = truncnorm_ppf(u, 0.0, 1.0, a[body])
    tail = ~body
    if np.any(tail):
        z[tail] = _rayleigh_tail(rng, a[tail])
    return mu + sd * z


def _rayleigh_tail(rng: np.random.Generator, a: NDArray) -> NDArray:
    c = 0.5 * a * a
    x = c - np.log1p(-rng.uniform(size=a.size))
    pending = rng.uniform(size=a.size) ** 2 * x > c
    while np.any(pending):
        cy = c[pending]
        y = cy - np.log1p(-rng.uniform(size=cy.size))
        accepted = rng.uniform(size=cy.size) ** 2 * y <= cy
        idx = np.flatnonzero(pending)
        x[idx[accepted]] = y[accepted]
        pending[idx[accepted]] = False
    return np.sqrt(2.0 * x)


def latent_scores(cdf_values: ArrayLike) -> NDArray:
    """Phi^-1 of clamped cdf values; never returns infinities."""
    return ndtri(np.clip(cdf_values, CDF_CLAMP, 1.0 - CDF_CLAMP))


@dataclass(frozen=True, slots=True)
class TruncatedNormal:
    """N(mu, sigma2) restricted to [lower, inf); ``lower`` may be -inf."""

    mu: float
    sigma2: float
    lower: float = -np.inf

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu):
            raise InvalidParameterError(f"mu must be finite, got {self.mu}")
        if not self.sigma2 > 0 or not np.isfinite(self.sigma2):
            raise InvalidParameterError(f"sigma2 must be positive, got {self.sigma2}")
        if np.isnan(self.lower) or self.lower == np.inf:
            raise InvalidParameterError(f"invalid lower bound {self.lower}")

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.sigma2))

    def pdf(self, t: ArrayLike) -> NDArray:
        return truncnorm_pdf(t, self.mu, self.sd, self.lower)

    def logpdf(self, t: ArrayLike) -> NDArray:
        return truncnorm_logpdf(t, self.mu, self.sd, self.lower)

    def cdf(self, t: ArrayLike) -> NDArray:
        return truncnorm_cdf(t, self.mu, self.sd, self.lower)

    def quantile(self, u: ArrayLike) -> NDArray:
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)) or np.any(np.isnan(u)):
            raise InvalidParameterError("quantile argument must lie in (0, 1)")
        return truncnorm_ppf(u, self.mu, self.sd, self.lower)

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...] = 1) -> NDArray:
        return sample_truncnorm(rng, self.mu, self.sd, self.lower, size)
