"""Per-draw effect evaluation over a chain and posterior summaries."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import TypeVar

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..model import Dataset, PosteriorDraw
from .mediation import mediation_effects_from_draws, potential_draws
from .principal import Thresholds, pooled_change_sd, principal_effects

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["mean", "sd", "q2.5", "q97.5", "p_negative", "n_defined"]

T = TypeVar("T")


def map_draws(
    func: Callable[[int, PosteriorDraw], T],
    draws: Sequence[PosteriorDraw],
    workers: int = 1,
) -> list[T]:
    """Apply ``func(index, draw)`` to every draw; results come back in draw order."""
    if workers <= 1 or len(draws) <= 1:
        return [func(i, draw) for i, draw in enumerate(draws)]
    results: dict[int, T] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, i, draw): i for i, draw in enumerate(draws)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return [results[i] for i in range(len(draws))]


def summarize(per_draw: pd.DataFrame, by: Sequence[str] = ("estimand",)) -> pd.DataFrame:
    """Posterior mean, s.d., central 95% interval, P(effect < 0) and defined-draw count.

    NaN values (undefined for a draw) are excluded from every statistic.
    """
    by = list(by)
    rows = []
    for key, group in per_draw.groupby(by, sort=False):
        key = key if isinstance(key, tuple) else (key,)
        rows.append({**dict(zip(by, key, strict=True)), **_posterior_stats(group["value"])})
    return pd.DataFrame(rows, columns=by + SUMMARY_COLUMNS)


def _posterior_stats(values: pd.Series) -> dict[str, float]:
    defined = values.dropna().to_numpy(dtype=float)
    if defined.size == 0:
        return {**dict.fromkeys(SUMMARY_COLUMNS[:-1], np.nan), "n_defined": 0}
    return {
        "mean": float(defined.mean()),
        "sd": float(defined.std(ddof=1)) if defined.size > 1 else 0.0,
        "q2.5": float(np.quantile(defined, 0.025)),
        "q97.5": float(np.quantile(defined, 0.975)),
        "p_negative": float(np.mean(defined < 0)),
        "n_defined": int(defined.size),
    }


@dataclass(slots=True)
class EffectSummary:
    """Per-draw values and posterior summaries of every estimand for one chain."""

    mediation_draws: pd.DataFrame
    principal_draws: pd.DataFrame
    strata_cross: pd.DataFrame | None
    sigma_hat: NDArray
    thresholds: Thresholds
    n_mc: int

    @property
    def mediation(self) -> pd.DataFrame:
        return summarize(self.mediation_draws)

    @property
    def principal(self) -> pd.DataFrame:
        return summarize(self.principal_draws)

    def empty_strata(self) -> pd.DataFrame:
        """Occupancy of principal strata that were empty in at least one draw."""
        counts = self.principal_draws.groupby("estimand", sort=False)["count"]
        occupancy = pd.DataFrame(
            {
                "empty_draws": counts.apply(lambda c: int((c == 0).sum())),
                "mean_count": counts.mean(),
            }
        )
        return occupancy[occupancy["empty_draws"] > 0].reset_index()


def posterior_effects(
    draws: Sequence[PosteriorDraw],
    dataset: Dataset,
    *,
    n_mc: int,
    seed: int,
    dissociative_multiplier: float,
    associative_multiplier: float,
    strata_pair: tuple[int, int] | None = (0, 1),
    nie_star: bool = False,
    workers: int = 1,
) -> EffectSummary:
    """Mediation and principal effects for every retained draw.

    Draw ``i`` uses the effect stream ``(seed, i)``, so results do not depend
    on ``workers``.
    """
    sigma_hat = pooled_change_sd(draws)
    thresholds = Thresholds.from_multipliers(
        sigma_hat, dissociative_multiplier, associative_multiplier
    )
    logger.info(
        "Effects over %d draws (n_mc=%d); sigma_hat=%s",
        len(draws),
        n_mc,
        np.array2string(sigma_hat, precision=4),
    )

    def one_draw(index: int, draw: PosteriorDraw) -> tuple[dict, list, pd.DataFrame | None]:
        potential = potential_draws(draw, dataset, n_mc, seed, index)
        mediation = mediation_effects_from_draws(draw, dataset, potential, nie_star)
        principal, cross = principal_effects(draw, dataset, thresholds, strata_pair)
        return mediation, principal, cross

    results = map_draws(one_draw, draws, workers)

    mediation_rows = [
        {"draw": i, "iteration": draws[i].iteration, "estimand": name, "value": value}
        for i, (mediation, _, _) in enumerate(results)
        for name, value in mediation.items()
    ]
    principal_rows = [
        {"draw": i, "iteration": draws[i].iteration, **row}
        for i, (_, principal, _) in enumerate(results)
        for row in principal
    ]
    crosses = [cross for _, _, cross in results if cross is not None]
    strata_cross = None
    if crosses:
        stacked = pd.concat(crosses, ignore_index=True)
        keys = list(stacked.columns[:2])
        strata_cross = (
            stacked.groupby(keys, sort=False)
            .agg(
                proportion=("proportion", "mean"),
                effect=("effect", "mean"),
                count=("count", "mean"),
            )
            .reset_index()
        )

    summary = EffectSummary(
        mediation_draws=pd.DataFrame(mediation_rows),
        principal_draws=pd.DataFrame(principal_rows),
        strata_cross=strata_cross,
        sigma_hat=sigma_hat,
        thresholds=thresholds,
        n_mc=n_mc,
    )
    empty = summary.empty_strata()
    if not empty.empty:
        logger.warning(
            "%d principal strata were empty in some draws: %s",
            len(empty),
            ", ".join(empty["estimand"]),
        )
    return summary
