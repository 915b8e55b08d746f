"""Posterior predictive replicates of the observed mediators and outcomes."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..distributions import PREDICTIVE_STREAM, RngStream
from ..errors import InvalidParameterError
from ..mcmc import OutcomeRegression, draw_potential_mediators, regression_inputs
from ..model import Dataset, PosteriorDraw

logger = logging.getLogger(__name__)

BAND = (0.025, 0.975)
OBSERVED_REPLICATE = -1


@dataclass(slots=True)
class PredictiveResult:
    """Per-unit predictive summaries and sorted replicate curves."""

    units: pd.DataFrame
    replicates: pd.DataFrame

    def coverage(self) -> pd.DataFrame:
        return (
            self.units.groupby("variable", sort=False)["covered"]
            .mean()
            .rename("coverage")
            .reset_index()
        )


def replicate_draw_indices(n_draws: int, n_rep: int) -> NDArray:
    """Evenly spaced draws; repeats draws when more replicates than draws are asked for."""
    return np.round(np.linspace(0, n_draws - 1, n_rep)).astype(int)


def simulate_observed(draw: PosteriorDraw, dataset: Dataset, rng: np.random.Generator) -> NDArray:
    """One replicate of (M, Y) at the observed covariates and arms: shape ``(n, K + 1)``."""
    k = draw.n_mediators
    full = draw_potential_mediators(draw, dataset.x, 1, rng)[:, 0, :]
    treated = dataset.z == 1
    observed_m = np.where(treated[:, None], full[:, k:], full[:, :k])
    y = np.empty(dataset.n)
    for arm in (0, 1):
        units = dataset.arm(arm)
        if units.size:
            regression = OutcomeRegression(draw.outcomes[arm])
            y[units] = regression.sample(regression_inputs(full[units], dataset.x[units]), rng)
    return np.column_stack([observed_m, y])


def posterior_predictive(
    draws: Sequence[PosteriorDraw], dataset: Dataset, n_rep: int, seed: int
) -> PredictiveResult:
    """Replicate datasets from ``n_rep`` retained draws; replicate ``r`` uses its own stream."""
    if n_rep < 1:
        raise InvalidParameterError("n_rep must be at least 1")
    if not draws:
        raise InvalidParameterError("at least one draw is needed")
    variables = [*dataset.mediator_names, "y"]
    observed = np.column_stack([dataset.m, dataset.y])
    picks = replicate_draw_indices(len(draws), n_rep)
    reps = np.stack(
        [
            simulate_observed(draws[d], dataset, RngStream(seed, (PREDICTIVE_STREAM, r)).generator)
            for r, d in enumerate(picks)
        ]
    )
    mean = reps.mean(axis=0)
    lower, upper = np.quantile(reps, BAND, axis=0)

    unit_rows = []
    for col, name in enumerate(variables):
        for i in range(dataset.n):
            unit_rows.append(
                {
                    "unit": dataset.ids[i],
                    "z": int(dataset.z[i]),
                    "variable": name,
                    "observed": observed[i, col],
                    "mean": mean[i, col],
                    "lower": lower[i, col],
                    "upper": upper[i, col],
                    "covered": bool(lower[i, col] <= observed[i, col] <= upper[i, col]),
                }
            )

    curves = [(OBSERVED_REPLICATE, observed)] + list(enumerate(reps))
    replicate_rows = [
        {"replicate": rep, "variable": name, "rank": rank, "value": value}
        for rep, values in curves
        for col, name in enumerate(variables)
        for rank, value in enumerate(np.sort(values[:, col]))
    ]
    result = PredictiveResult(pd.DataFrame(unit_rows), pd.DataFrame(replicate_rows))
    for row in result.coverage().itertuples(index=False):
        logger.info("Predictive 95%% band coverage for %s: %.3f", row.variable, row.coverage)
    return result
