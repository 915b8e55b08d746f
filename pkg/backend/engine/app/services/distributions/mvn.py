"""Multivariate normal, (inverse) Wishart and Mahalanobis helpers."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, stats

from ..errors import InvalidParameterError, NotPositiveDefiniteError

_LOG_2PI = np.log(2.0 * np.pi)


def cholesky_or_raise(matrix: NDArray, what: str = "covariance") -> NDArray:
    """Lower Cholesky factor; reports the smallest eigenvalue on failure."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError(f"{what} must be square, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-10):
        raise InvalidParameterError(f"{what} must be symmetric")
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(what, float(np.linalg.eigvalsh(matrix)[0])) from exc


@dataclass(frozen=True, slots=True)
class MultivariateNormal:
    """Gaussian with a validated covariance and a cached Cholesky factor."""

    mean: NDArray
    cov: NDArray
    chol: NDArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise InvalidParameterError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", cholesky_or_raise(cov))

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...] = 1) -> NDArray:
        shape = size if isinstance(size, tuple) else (size,)
        noise = rng.standard_normal(shape + (self.dim,))
        return self.mean + noise @ self.chol.T

    def logpdf(self, x: ArrayLike) -> NDArray:
        diff = np.asarray(x, dtype=float) - self.mean
        flat = diff.reshape(-1, self.dim)
        solved = linalg.solve_triangular(self.chol, flat.T, lower=True)
        quad = np.sum(solved * solved, axis=0)
        log_det = 2.0 * np.sum(np.log(np.diag(self.chol)))
        out = -0.5 * (self.dim * _LOG_2PI + log_det + quad)
        return out.reshape(diff.shape[:-1])

    def conditional(self, given: Sequence[int], values: ArrayLike) -> MultivariateNormal:
        """Exact Gaussian conditional of the remaining coordinates."""
        given = np.asarray(given, dtype=int)
        rest = np.setdiff1d(np.arange(self.dim), given)
        values = np.asarray(values, dtype=float)
        if values.shape != (given.size,):
            raise InvalidParameterError("one conditioning value is needed per given index")
        coefficients, cond_cov = conditional_coefficients(self.cov, rest, given)
        cond_mean = self.mean[rest] + coefficients @ (values - self.mean[given])
        return MultivariateNormal(cond_mean, cond_cov)


def conditional_coefficients(
    cov: NDArray, rest: NDArray, given: NDArray
) -> tuple[NDArray, NDArray]:
    """Regression matrix B and residual covariance of ``rest`` given ``given``."""
    cov_rg = cov[np.ix_(rest, given)]
    cov_gg = cov[np.ix_(given, given)]
    factor = linalg.cho_factor(cov_gg, lower=True)
    coefficients = linalg.cho_solve(factor, cov_rg.T).T
    residual = cov[np.ix_(rest, rest)] - coefficients @ cov_rg.T
    return coefficients, 0.5 * (residual + residual.T)


def inverse_wishart(df: float, scale: ArrayLike, rng: np.random.Generator) -> NDArray:
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    dim = scale.shape[0]
    if not df > dim - 1:
        raise InvalidParameterError(f"inverse-Wishart df must exceed {dim - 1}, got {df}")
    cholesky_or_raise(scale, "inverse-Wishart scale")
    draw = stats.invwishart.rvs(df=df, scale=scale, random_state=rng)
    draw = np.atleast_2d(draw).reshape(dim, dim)
    return 0.5 * (draw + draw.T)


def inverse_wishart_logpdf(matrix: ArrayLike, df: float, scale: ArrayLike) -> float:
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float)).reshape(scale.shape)
    if scale.shape[0] == 1:
        return float(stats.invwishart.logpdf(matrix[0, 0], df=df, scale=scale[0, 0]))
    return float(stats.invwishart.logpdf(matrix, df=df, scale=scale))


def wishart(df: float, scale: ArrayLike, rng: np.random.Generator) -> NDArray:
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    dim = scale.shape[0]
    if not df > dim - 1:
        raise InvalidParameterError(f"Wishart df must exceed {dim - 1}, got {df}")
    cholesky_or_raise(scale, "Wishart scale")
    draw = np.atleast_2d(stats.wishart.rvs(df=df, scale=scale, random_state=rng))
    draw = draw.reshape(dim, dim)
    return 0.5 * (draw + draw.T)


def mahalanobis(w: ArrayLike, cov: ArrayLike) -> NDArray:
    """sqrt(w' S^-1 w); ``w`` may carry leading batch dimensions."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    chol = cholesky_or_raise(cov, "difference covariance")
    w = np.asarray(w, dtype=float)
    flat = np.atleast_2d(w).reshape(-1, cov.shape[0])
    solved = linalg.solve_triangular(chol, flat.T, lower=True)
    distance = np.sqrt(np.sum(solved * solved, axis=0))
    return distance.reshape(w.shape[:-1]) if w.ndim > 1 else distance[0]
