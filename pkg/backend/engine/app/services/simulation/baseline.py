"""Product-of-coefficients mediation estimates from linear regressions."""

from __future__ import annotations

import itertools
import logging

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..errors import InvalidParameterError, RankDeficientDesignError
from ..model import Dataset

logger = logging.getLogger(__name__)

DEFAULT_BOOTSTRAP = 1000


def ols(design: NDArray, response: NDArray) -> NDArray:
    """Least-squares coefficients; the design must have full column rank."""
    coef, _, rank, _ = np.linalg.lstsq(design, response, rcond=None)
    if rank < design.shape[1]:
        raise RankDeficientDesignError(
            f"design of shape {design.shape} has rank {rank}", module="simulation"
        )
    return coef


def baseline_point(dataset: Dataset) -> dict[str, float]:
    """NIE_k = alpha_k * beta_k, NDE = coefficient of z, JNIE = sum of NIE_k.

    Pairwise joint effects are sums of the two single effects, so every overlap is 0.
    """
    n, k = dataset.n, dataset.k
    z = dataset.z.astype(float)
    mediator_design = np.column_stack([np.ones(n), z, dataset.x])
    alphas = ols(mediator_design, dataset.m)[1]
    outcome_design = np.column_stack([np.ones(n), z, dataset.m, dataset.x])
    coef = ols(outcome_design, dataset.y)
    nde = float(coef[1])
    nie = alphas * coef[2 : 2 + k]
    jnie = float(nie.sum())
    values = {"TE": nde + jnie, "NDE": nde, "JNIE": jnie}
    values.update({f"NIE_{med + 1}": float(nie[med]) for med in range(k)})
    for a, b in itertools.combinations(range(k), 2):
        values[f"JNIE_{a + 1}{b + 1}"] = float(nie[a] + nie[b])
        values[f"OVERLAP_{a + 1}{b + 1}"] = 0.0
    return values


def _resample(dataset: Dataset, rows: NDArray) -> Dataset:
    return Dataset(
        z=dataset.z[rows],
        m=dataset.m[rows],
        y=dataset.y[rows],
        x=dataset.x[rows],
        lower_bound=dataset.lower_bound,
        mediator_names=dataset.mediator_names,
        covariate_names=dataset.covariate_names,
    )


def parametric_baseline(
    dataset: Dataset, rng: np.random.Generator, n_boot: int = DEFAULT_BOOTSTRAP
) -> pd.DataFrame:
    """Point estimates with nonparametric-bootstrap 95% intervals.

    Raises:
        RankDeficientDesignError: the full-data design is rank deficient.
    """
    if n_boot < 1:
        raise InvalidParameterError("n_boot must be at least 1")
    point = baseline_point(dataset)
    replicates = []
    skipped = 0
    for _ in range(n_boot):
        rows = rng.integers(0, dataset.n, size=dataset.n)
        try:
            replicates.append(baseline_point(_resample(dataset, rows)))
        except RankDeficientDesignError:
            skipped += 1
    if skipped:
        logger.warning("%d of %d bootstrap resamples had a rank-deficient design", skipped, n_boot)
    boot = pd.DataFrame(replicates, columns=list(point))
    return pd.DataFrame(
        {
            "estimand": list(point),
            "estimate": list(point.values()),
            "lower": [boot[name].quantile(0.025) for name in point],
            "upper": [boot[name].quantile(0.975) for name in point],
        }
    )
