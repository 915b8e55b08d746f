"""Mediation effects under relaxed sequential ignorability over (epsilon, chi) grids."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..effects import (
    Pattern,
    control_patterns,
    effects_from_pattern_means,
    map_draws,
    pattern_conditionals,
    potential_draws,
    required_patterns,
    summarize,
    switched,
    treated_pattern,
    unit_means,
)
from ..errors import InvalidParameterError
from ..mcmc import ConditionalOutcome
from ..model import Dataset, PosteriorDraw, SensitivityConfig
from .dstats import SubsetDistance, d_statistics, difference_covariance
from .tilt import Standardizer, tilted_conditional_density

logger = logging.getLogger(__name__)


def chi_label(chi: Sequence[float]) -> str:
    return ",".join(f"{c:g}" for c in chi)


def switched_set(pattern: Pattern, arm: int) -> tuple[int, ...]:
    """Mediators set to the world opposite to the outcome arm."""
    return tuple(med for med, p in enumerate(pattern) if p != arm)


@dataclass(frozen=True, slots=True)
class ChiBounds:
    """Admissible region for one draw: every chi_k >= 1 and prod(chi) <= upper."""

    upper: float
    n_units: int

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.upper)

    def admits(self, chi: Sequence[float]) -> bool:
        return all(c >= 1.0 for c in chi) and (self.unbounded or math.prod(chi) <= self.upper)


def _density_ratio(
    draw: PosteriorDraw,
    dataset: Dataset,
    potential: NDArray,
    units: NDArray,
    y_star: float,
) -> ChiBounds:
    if units.size == 0:
        return ChiBounds(math.inf, 0)
    k = draw.n_mediators
    none = switched(k, tuple(range(k)))
    full = treated_pattern(k)
    cond = pattern_conditionals(draw, potential[units], dataset.x[units], [full], [none])
    untreated = float(cond.control[none].density(y_star).mean())
    treated = float(cond.treated[full].density(y_star).mean())
    upper = untreated / treated if treated > 0 else math.inf
    return ChiBounds(upper, int(units.size))


def chi_bounds(
    draw: PosteriorDraw,
    dataset: Dataset,
    y_star: float,
    epsilon: float,
    n_mc: int,
    seed: int,
    draw_index: int = 0,
) -> ChiBounds:
    """Upper bound on prod(chi) from the arm densities at ``y_star``.

    The ratio f0(y* | M(0,...,0)) / f1(y* | M(1,...,1)) is averaged over units whose
    change on all mediators reaches the threshold; with no such unit the region is
    unbounded above.
    """
    potential = potential_draws(draw, dataset, n_mc, seed, draw_index)
    distances = d_statistics(draw.mediator_changes, difference_covariance(potential), epsilon)
    units = np.flatnonzero(distances[tuple(range(draw.n_mediators))].exceeds)
    return _density_ratio(draw, dataset, potential, units, y_star)


def _tilted_means(
    conditionals: Mapping[Pattern, ConditionalOutcome],
    base_means: Mapping[Pattern, NDArray],
    arm: int,
    distances: Mapping[tuple[int, ...], SubsetDistance],
    chi: Sequence[float],
    standardizer: Standardizer,
) -> tuple[dict[Pattern, NDArray], int]:
    out = dict(base_means)
    n_tilted = 0
    for pattern, conditional in conditionals.items():
        subset = switched_set(pattern, arm)
        if not subset:
            continue
        chi_product = math.prod(chi[med] for med in subset)
        tilted_units = distances[subset].exceeds
        if chi_product == 1.0 or not np.any(tilted_units):
            continue
        chi_units = np.where(tilted_units, chi_product, 1.0)[:, None]
        tilted = tilted_conditional_density(conditional, chi_units, standardizer)
        out[pattern] = np.where(tilted_units, tilted.mean().mean(axis=1), base_means[pattern])
        n_tilted += int(tilted_units.sum())
    return out, n_tilted


@dataclass(slots=True)
class SensitivityResult:
    """Per-draw estimands over the (epsilon, chi) grid and per-draw chi bounds."""

    per_draw: pd.DataFrame
    bounds: pd.DataFrame
    standardizer: Standardizer
    y_star: float

    @property
    def summary(self) -> pd.DataFrame:
        return summarize(self.per_draw, by=("epsilon", "chi", "estimand"))


def sensitivity_effects(
    draws: Sequence[PosteriorDraw],
    dataset: Dataset,
    config: SensitivityConfig,
    *,
    n_mc: int,
    seed: int,
    standardizer: Standardizer | None = None,
    nie_star: bool = False,
    workers: int = 1,
) -> SensitivityResult:
    """Recompute mediation estimands with tilted conditional means.

    A counterfactual pattern is tilted for a unit when that unit's change on the
    switched mediators reaches the epsilon threshold; its tilt parameter is the
    product of chi over those mediators. Each draw reuses the shared counterfactual
    draws of ``posterior_effects``, so untilted grid points reproduce it exactly.
    """
    if not draws:
        raise InvalidParameterError("at least one draw is needed")
    k = draws[0].n_mediators
    chis = [list(c) for c in config.chi] or [[1.0] * k]
    for chi in chis:
        if len(chi) != k:
            raise InvalidParameterError(f"chi vector {chi} must have {k} entries")
    standardizer = standardizer or Standardizer.from_dataset(dataset)
    y_star = config.y_star if config.y_star is not None else standardizer.default_y_star()
    patterns = required_patterns(k)
    controls = control_patterns(k, nie_star)
    logger.info(
        "Sensitivity grid: %d epsilon x %d chi over %d draws (y*=%.4g)",
        len(config.epsilons),
        len(chis),
        len(draws),
        y_star,
    )

    def one_draw(index: int, draw: PosteriorDraw) -> tuple[list[dict], list[dict]]:
        potential = potential_draws(draw, dataset, n_mc, seed, index)
        conditionals = pattern_conditionals(draw, potential, dataset.x, patterns, controls)
        treated, control = unit_means(conditionals)
        cov = difference_covariance(potential)
        rows, bounds = [], []
        for epsilon in config.epsilons:
            distances = d_statistics(draw.mediator_changes, cov, epsilon)
            units = np.flatnonzero(distances[tuple(range(k))].exceeds)
            bound = _density_ratio(draw, dataset, potential, units, y_star)
            bounds.append(
                {"epsilon": epsilon, "draw": index, "upper": bound.upper, "n_units": bound.n_units}
            )
            for chi in chis:
                t_means, n1 = _tilted_means(
                    conditionals.treated, treated, 1, distances, chi, standardizer
                )
                c_means, n0 = _tilted_means(
                    conditionals.control, control, 0, distances, chi, standardizer
                )
                values = effects_from_pattern_means(t_means, c_means, k, nie_star)
                label = chi_label(chi)
                rows.extend(
                    {
                        "epsilon": epsilon,
                        "chi": label,
                        "draw": index,
                        "estimand": name,
                        "value": value,
                        "admissible": bound.admits(chi),
                        "n_tilted": n0 + n1,
                    }
                    for name, value in values.items()
                )
        return rows, bounds

    results = map_draws(one_draw, draws, workers)
    per_draw = pd.DataFrame([row for rows, _ in results for row in rows])
    bounds = pd.DataFrame([row for _, rows in results for row in rows])

    outside = per_draw.loc[~per_draw["admissible"], ["epsilon", "chi"]].drop_duplicates()
    for epsilon, chi in outside.itertuples(index=False):
        logger.warning(
            "chi=(%s) exceeds the density-ratio bound in some draws at epsilon=%g", chi, epsilon
        )
    return SensitivityResult(per_draw, bounds, standardizer, y_star)
