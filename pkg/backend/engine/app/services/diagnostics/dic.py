"""DIC3 for the marginal mediator models and their single-component baseline."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp

from ..distributions import PARAMETRIC_STREAM, RngStream
from ..errors import InvalidParameterError, RankDeficientDesignError, ZeroPredictiveDensityError
from ..mcmc import coordinate_labels, marginal_mixture
from ..model import Dataset, MarginalParams, PosteriorDraw, coordinate

logger = logging.getLogger(__name__)


def dic3(loglik: ArrayLike) -> float:
    """-4 E[log f(T | theta)] + 2 sum_i log f_hat(T_i) from an ``(m draws, n points)`` matrix."""
    loglik = np.atleast_2d(np.asarray(loglik, dtype=float))
    n_draws = loglik.shape[0]
    if n_draws == 0 or loglik.shape[1] == 0:
        raise InvalidParameterError("DIC3 needs at least one draw and one data point")
    with np.errstate(divide="ignore"):
        predictive = logsumexp(loglik, axis=0) - np.log(n_draws)
    bad = np.flatnonzero(~np.isfinite(predictive))
    if bad.size:
        raise ZeroPredictiveDensityError(int(bad[0]))
    expected = float(loglik.sum(axis=1).mean())
    return -4.0 * expected + 2.0 * float(predictive.sum())


def margin_loglik(params: Sequence[MarginalParams], values: ArrayLike, x: ArrayLike) -> NDArray:
    """Log density of the observed values of one margin under each draw's marginal mixture."""
    values = np.asarray(values, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(values.size, -1)
    return np.stack([marginal_mixture(p, x).logpdf(values) for p in params])


def parametric_marginal_draws(
    values: ArrayLike,
    x: ArrayLike,
    lower: float,
    n_draws: int,
    rng: np.random.Generator,
) -> list[MarginalParams]:
    """Single-component baseline: linear regression under the flat prior, one component each.

    sigma^2 ~ scaled-inverse-chi2(n - q, s^2) and the coefficients ~ N(b_hat, sigma^2 (X'X)^-1),
    with covariates centred so the intercept is on the data scale.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(values.size, -1)
    n = values.size
    x_center = x.mean(axis=0) if n else np.zeros(x.shape[1])
    design = np.column_stack([np.ones(n), x - x_center])
    q = design.shape[1]
    if n <= q or np.linalg.matrix_rank(design) < q:
        raise RankDeficientDesignError(
            f"baseline design with {n} rows and {q} columns is rank deficient",
            module="diagnostics",
        )
    gram_inv = np.linalg.inv(design.T @ design)
    coef = gram_inv @ design.T @ values
    resid = values - design @ coef
    dof = n - q
    s2 = float(resid @ resid) / dof
    chol = np.linalg.cholesky(gram_inv)
    out = []
    for _ in range(n_draws):
        sigma2 = dof * s2 / rng.chisquare(dof)
        draw = coef + np.sqrt(sigma2) * (chol @ rng.standard_normal(q))
        out.append(
            MarginalParams(
                intercepts=[draw[0]],
                precisions=[1.0 / sigma2],
                weights=[1.0],
                beta=draw[1:],
                x_center=x_center,
                mass=1.0,
                mu=draw[0],
                s=1.0 / sigma2,
                a_star=1.0,
                lower=lower,
            )
        )
    return out


def dic_table(
    draws: Sequence[PosteriorDraw],
    dataset: Dataset,
    *,
    parametric_draws: int = 200,
    seed: int = 0,
) -> pd.DataFrame:
    """DIC3 per (mediator, arm) margin for the DP mixture and the parametric baseline."""
    if len(draws) < 2:
        raise InvalidParameterError("DIC3 needs at least two retained draws")
    labels = coordinate_labels(dataset)
    rows = []
    for arm in (0, 1):
        units = dataset.arm(arm)
        for med in range(dataset.k):
            j = coordinate(arm, med, dataset.k)
            values = dataset.m[units, med]
            x = dataset.x[units]
            nonparametric = dic3(margin_loglik([d.marginals[j] for d in draws], values, x))
            rng = RngStream(seed, (PARAMETRIC_STREAM, j)).generator
            baseline = parametric_marginal_draws(
                values, x, dataset.lower_bound, parametric_draws, rng
            )
            parametric = dic3(margin_loglik(baseline, values, x))
            rows.append(
                {
                    "margin": labels[j],
                    "mediator": dataset.mediator_names[med],
                    "arm": arm,
                    "n": int(units.size),
                    "dic3_dpm": nonparametric,
                    "dic3_parametric": parametric,
                }
            )
            logger.debug(
                "DIC3 %s: DPM %.2f, parametric %.2f", labels[j], nonparametric, parametric
            )
    return pd.DataFrame(rows)
