"""Principal-stratum effects: dissociative and associative averages, strata cross tables."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from ..errors import InvalidParameterError
from ..mcmc import OutcomeRegression, regression_inputs
from ..model import Dataset, PosteriorDraw

logger = logging.getLogger(__name__)


class Stratum(str, Enum):
    """Position of one mediator change relative to the two thresholds."""

    DECREASE = "decrease"
    LOWER_BAND = "lower band"
    NO_CHANGE = "no change"
    UPPER_BAND = "upper band"
    INCREASE = "increase"


CROSS_STRATA = (Stratum.DECREASE, Stratum.NO_CHANGE, Stratum.INCREASE)


@dataclass(frozen=True, slots=True)
class Thresholds:
    """Absolute per-mediator thresholds C^D (dissociative) and C^A (associative)."""

    dissociative: tuple[float, ...]
    associative: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.dissociative) != len(self.associative):
            raise InvalidParameterError("one threshold of each kind is needed per mediator")
        if any(c < 0 for c in (*self.dissociative, *self.associative)):
            raise InvalidParameterError("thresholds must be non-negative")
        if any(a < d for d, a in zip(self.dissociative, self.associative, strict=True)):
            raise InvalidParameterError(
                "associative thresholds must not be below the dissociative ones"
            )

    @classmethod
    def from_multipliers(
        cls, sigma_hat: ArrayLike, dissociative: float, associative: float
    ) -> Thresholds:
        sigma_hat = np.asarray(sigma_hat, dtype=float).reshape(-1)
        return cls(
            tuple(float(dissociative * s) for s in sigma_hat),
            tuple(float(associative * s) for s in sigma_hat),
        )

    @property
    def n_mediators(self) -> int:
        return len(self.dissociative)


def pooled_change_sd(draws: Sequence[PosteriorDraw]) -> NDArray:
    """Posterior s.d. of unit-level M_k(1) - M_k(0), pooled over units and draws."""
    if not draws:
        raise InvalidParameterError("at least one draw is needed")
    changes = np.concatenate([d.mediator_changes for d in draws], axis=0)
    return changes.std(axis=0, ddof=1) if changes.shape[0] > 1 else np.zeros(changes.shape[1])


def subsets(k: int) -> list[tuple[int, ...]]:
    """Nonempty subsets of mediator indices, singletons first."""
    return [c for size in range(1, k + 1) for c in itertools.combinations(range(k), size)]


def subset_label(subset: tuple[int, ...]) -> str:
    return "{" + ",".join(str(med + 1) for med in subset) + "}"


def classify_changes(delta_m: ArrayLike, thresholds: Thresholds) -> NDArray:
    """Stratum of every (unit, mediator) change, as an object array of ``Stratum``."""
    delta_m = np.atleast_2d(np.asarray(delta_m, dtype=float))
    c_d = np.asarray(thresholds.dissociative)
    c_a = np.asarray(thresholds.associative)
    out = np.full(delta_m.shape, Stratum.NO_CHANGE, dtype=object)
    out[delta_m >= c_d] = Stratum.UPPER_BAND
    out[delta_m <= -c_d] = Stratum.LOWER_BAND
    out[delta_m > c_a] = Stratum.INCREASE
    out[delta_m < -c_a] = Stratum.DECREASE
    out[np.abs(delta_m) < c_d] = Stratum.NO_CHANGE
    return out


def unit_effects(draw: PosteriorDraw, dataset: Dataset) -> NDArray:
    """Predicted Y(1) - Y(0) per unit at its completed 2K mediator vector."""
    inputs = regression_inputs(draw.mediators, dataset.x)
    y1 = OutcomeRegression(draw.outcomes[1]).mean(inputs)
    y0 = OutcomeRegression(draw.outcomes[0]).mean(inputs)
    return y1 - y0


def stratum_effects(
    delta_m: ArrayLike, effects: ArrayLike, thresholds: Thresholds
) -> list[dict[str, object]]:
    """EDE, EAE- and EAE+ for every nonempty mediator subset.

    An empty stratum yields a NaN value with count 0, never an imputed zero.
    """
    delta_m = np.atleast_2d(np.asarray(delta_m, dtype=float))
    effects = np.asarray(effects, dtype=float)
    if delta_m.shape[1] != thresholds.n_mediators:
        raise InvalidParameterError("thresholds do not match the number of mediators")
    c_d = np.asarray(thresholds.dissociative)
    c_a = np.asarray(thresholds.associative)
    rows: list[dict[str, object]] = [
        {"estimand": "TE", "value": float(effects.mean()), "count": effects.size}
    ]
    for subset in subsets(delta_m.shape[1]):
        cols = list(subset)
        masks = {
            "EDE": np.all(np.abs(delta_m[:, cols]) < c_d[cols], axis=1),
            "EAE-": np.all(delta_m[:, cols] < -c_a[cols], axis=1),
            "EAE+": np.all(delta_m[:, cols] > c_a[cols], axis=1),
        }
        for name, mask in masks.items():
            count = int(mask.sum())
            value = float(effects[mask].mean()) if count else float("nan")
            label = f"{name}{subset_label(subset)}"
            rows.append({"estimand": label, "value": value, "count": count})
    return rows


def strata_cross_table(
    delta_m: ArrayLike,
    effects: ArrayLike,
    thresholds: Thresholds,
    pair: tuple[int, int],
) -> pd.DataFrame:
    """3x3 cross-classification of two mediators' changes with stratum effects and shares."""
    delta_m = np.atleast_2d(np.asarray(delta_m, dtype=float))
    effects = np.asarray(effects, dtype=float)
    first, second = pair
    strata = classify_changes(delta_m, thresholds)
    n = delta_m.shape[0]
    rows = []
    for row_stratum, col_stratum in itertools.product(CROSS_STRATA, CROSS_STRATA):
        mask = (strata[:, first] == row_stratum) & (strata[:, second] == col_stratum)
        count = int(mask.sum())
        rows.append(
            {
                f"m{first + 1}": row_stratum.value,
                f"m{second + 1}": col_stratum.value,
                "proportion": count / n if n else float("nan"),
                "effect": float(effects[mask].mean()) if count else float("nan"),
                "count": count,
            }
        )
    return pd.DataFrame(rows)


def principal_effects(
    draw: PosteriorDraw,
    dataset: Dataset,
    thresholds: Thresholds,
    pair: tuple[int, int] | None = None,
) -> tuple[list[dict[str, object]], pd.DataFrame | None]:
    """Per-draw EDE/EAE values and, when ``pair`` is given, the strata cross table."""
    delta_m = draw.mediator_changes
    effects = unit_effects(draw, dataset)
    rows = stratum_effects(delta_m, effects, thresholds)
    cross = None
    if pair is not None and draw.n_mediators > max(pair):
        cross = strata_cross_table(delta_m, effects, thresholds, pair)
    return rows, cross
