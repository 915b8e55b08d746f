"""Causal-effect-predictiveness surfaces E[Y(1) - Y(0) | M_k(0), M_k(1)]."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from ..distributions import CDF_CLAMP, conditional_coefficients, latent_scores
from ..errors import InvalidParameterError
from ..mcmc import OutcomeRegression, marginal_mixture, regression_inputs
from ..model import Dataset, PosteriorDraw, coordinate

logger = logging.getLogger(__name__)


def default_grid(dataset: Dataset, k: int, size: int) -> NDArray:
    """Evenly spaced values over the observed range of mediator ``k``."""
    values = dataset.m[:, k]
    return np.linspace(values.min(), values.max(), size)


def _surface_for_draw(
    draw: PosteriorDraw,
    k: int,
    grid: NDArray,
    x_rows: NDArray,
    n_mc: int,
    rng: np.random.Generator,
) -> NDArray:
    n_med = draw.n_mediators
    dim = 2 * n_med
    given = np.array([coordinate(0, k, n_med), coordinate(1, k, n_med)])
    rest = np.setdiff1d(np.arange(dim), given)
    m0, m1 = np.meshgrid(grid, grid, indexing="ij")
    cells = np.column_stack([m0.ravel(), m1.ravel()])
    n_units, n_cells = x_rows.shape[0], cells.shape[0]

    full = np.empty((n_units, n_cells, n_mc, dim))
    fixed_scores = np.empty((n_units, n_cells, 2))
    for slot, j in enumerate(given):
        values = np.broadcast_to(cells[:, slot], (n_units, n_cells))
        full[..., j] = values[..., None]
        fixed_scores[..., slot] = latent_scores(
            marginal_mixture(draw.marginals[j], x_rows).cdf(values)
        )

    if rest.size:
        corr = draw.correlation.values
        coefficients, residual = conditional_coefficients(corr, rest, given)
        noise_chol = np.linalg.cholesky(residual)
        centre = fixed_scores @ coefficients.T
        noise = rng.standard_normal((n_units, n_cells, n_mc, rest.size)) @ noise_chol.T
        scores = centre[:, :, None, :] + noise
        u = np.clip(ndtr(scores), CDF_CLAMP, 1.0 - CDF_CLAMP)
        for slot, j in enumerate(rest):
            mixture = marginal_mixture(draw.marginals[j], x_rows)
            full[..., j] = mixture.quantile(u[..., slot])

    inputs = regression_inputs(full, x_rows[:, None, None, :])
    effect = OutcomeRegression(draw.outcomes[1]).mean(inputs) - OutcomeRegression(
        draw.outcomes[0]
    ).mean(inputs)
    return effect.mean(axis=(0, 2)).reshape(grid.size, grid.size)


def cep_surface(
    draws: Sequence[PosteriorDraw],
    dataset: Dataset,
    k: int,
    grid: ArrayLike,
    n_mc: int,
    rng: np.random.Generator,
    max_units: int | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Posterior-averaged surface over ``grid x grid`` and the last draw's point cloud.

    The remaining coordinates are drawn from their conditional copula law
    given the two fixed scores; covariates follow the empirical distribution,
    optionally subsampled to ``max_units`` rows.
    """
    if not draws:
        raise InvalidParameterError("at least one draw is needed for a CEP surface")
    if not 0 <= k < draws[0].n_mediators:
        raise InvalidParameterError(f"mediator index {k} out of range")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    x_rows = dataset.x
    if max_units is not None and dataset.n > max_units:
        x_rows = x_rows[np.sort(rng.choice(dataset.n, size=max_units, replace=False))]

    surface = np.zeros((grid.size, grid.size))
    for draw in draws:
        surface += _surface_for_draw(draw, k, grid, x_rows, n_mc, rng)
    surface /= len(draws)

    m0, m1 = np.meshgrid(grid, grid, indexing="ij")
    table = pd.DataFrame({"m0": m0.ravel(), "m1": m1.ravel(), "effect": surface.ravel()})
    last = draws[-1].mediators
    n_med = draws[-1].n_mediators
    cloud = pd.DataFrame(
        {
            "unit": list(dataset.ids),
            "m0": last[:, coordinate(0, k, n_med)],
            "m1": last[:, coordinate(1, k, n_med)],
        }
    )
    logger.debug("CEP surface for mediator %d over %d draws", k + 1, len(draws))
    return table, cloud
