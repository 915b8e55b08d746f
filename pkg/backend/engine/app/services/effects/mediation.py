"""Natural direct and indirect effects by shared-draw Monte Carlo.

Every integral for one posterior draw reuses the same ``(n, n_mc, 2K)``
copula draws of the potential mediators, so TE = NDE + JNIE holds exactly
per draw.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..distributions import EFFECTS_STREAM, RngStream
from ..errors import InvalidParameterError
from ..mcmc import ConditionalOutcome, OutcomeRegression, draw_potential_mediators
from ..model import Dataset, PosteriorDraw

logger = logging.getLogger(__name__)

Pattern = tuple[int, ...]


def treated_pattern(k: int) -> Pattern:
    return (1,) * k


def switched(k: int, indices: tuple[int, ...]) -> Pattern:
    """Pattern with the given mediators taken from the untreated world."""
    return tuple(0 if med in indices else 1 for med in range(k))


def required_patterns(k: int) -> list[Pattern]:
    """Patterns of Y(1; M(p)) every mediation estimand needs."""
    patterns = {treated_pattern(k), switched(k, tuple(range(k)))}
    patterns.update(switched(k, (med,)) for med in range(k))
    patterns.update(switched(k, pair) for pair in itertools.combinations(range(k), 2))
    return sorted(patterns, reverse=True)


def control_patterns(k: int, nie_star: bool = False) -> list[Pattern]:
    """Patterns of Y(0; M(p)); only the alternative NIE contrasts need more than M(0,...,0)."""
    patterns = [switched(k, tuple(range(k)))]
    if nie_star:
        patterns += [treated_pattern(k)] + [switched(k, (med,)) for med in range(k)]
    return patterns


def estimand_names(k: int, nie_star: bool = False) -> list[str]:
    names = ["TE", "NDE", "JNIE"]
    names += [f"NIE_{med + 1}" for med in range(k)]
    pairs = list(itertools.combinations(range(1, k + 1), 2))
    names += [f"JNIE_{a}{b}" for a, b in pairs]
    names += [f"OVERLAP_{a}{b}" for a, b in pairs]
    if nie_star:
        names += [f"NIE*_{med + 1}" for med in range(k)]
    return names


def potential_draws(
    draw: PosteriorDraw, dataset: Dataset, n_mc: int, seed: int, draw_index: int
) -> NDArray:
    """Shared counterfactual draws for one posterior draw, keyed by ``(seed, draw_index)``."""
    rng = RngStream(seed, (EFFECTS_STREAM, draw_index)).generator
    return draw_potential_mediators(draw, dataset.x, n_mc, rng)


def _pattern_inputs(potential: NDArray, pattern: Pattern, x: NDArray, arm: int = 1) -> NDArray:
    """Regression inputs with M(p) in arm ``arm``'s own-world slot and M(1 - p) in the other."""
    k = len(pattern)
    untreated, treated = potential[..., :k], potential[..., k:]
    take_treated = np.asarray(pattern, dtype=bool)
    operative = np.where(take_treated, treated, untreated)
    complement = np.where(take_treated, untreated, treated)
    covariates = np.broadcast_to(x[:, None, :], potential.shape[:-1] + (x.shape[1],))
    slots = [complement, operative] if arm == 1 else [operative, complement]
    return np.concatenate([*slots, covariates], axis=-1)


@dataclass(frozen=True, slots=True, eq=False)
class PatternConditionals:
    """Conditional outcome laws over ``(n, n_mc)`` for every needed pattern."""

    treated: Mapping[Pattern, ConditionalOutcome]
    control: Mapping[Pattern, ConditionalOutcome]


def pattern_conditionals(
    draw: PosteriorDraw,
    potential: NDArray,
    x: NDArray,
    patterns: list[Pattern],
    controls: list[Pattern],
) -> PatternConditionals:
    """Y(z; M(p)) uses arm z's regression with M(p) in its own-world slot."""
    arm0 = OutcomeRegression(draw.outcomes[0])
    arm1 = OutcomeRegression(draw.outcomes[1])
    treated = {p: arm1.conditional(_pattern_inputs(potential, p, x)) for p in patterns}
    control = {p: arm0.conditional(_pattern_inputs(potential, p, x, arm=0)) for p in controls}
    return PatternConditionals(treated, control)


def effects_from_pattern_means(
    treated_means: Mapping[Pattern, NDArray],
    control_means: Mapping[Pattern, NDArray],
    k: int,
    nie_star: bool = False,
) -> dict[str, float]:
    """Population estimands from unit-level E[Y(z; M(p)) | x_i]."""
    full = treated_pattern(k)
    none = switched(k, tuple(range(k)))
    y1 = treated_means[full]
    nde = float(np.mean(treated_means[none] - control_means[none]))
    jnie = float(np.mean(y1 - treated_means[none]))
    values = {"TE": nde + jnie, "NDE": nde, "JNIE": jnie}
    for med in range(k):
        values[f"NIE_{med + 1}"] = float(np.mean(y1 - treated_means[switched(k, (med,))]))
    for a, b in itertools.combinations(range(k), 2):
        joint = float(np.mean(y1 - treated_means[switched(k, (a, b))]))
        values[f"JNIE_{a + 1}{b + 1}"] = joint
        values[f"OVERLAP_{a + 1}{b + 1}"] = values[f"NIE_{a + 1}"] + values[f"NIE_{b + 1}"] - joint
    if nie_star:
        y0_full = control_means[full]
        for med in range(k):
            values[f"NIE*_{med + 1}"] = float(
                np.mean(y0_full - control_means[switched(k, (med,))])
            )
    return values


def unit_means(
    conditionals: PatternConditionals,
) -> tuple[dict[Pattern, NDArray], dict[Pattern, NDArray]]:
    """Average each conditional mean over the Monte Carlo axis."""
    treated = {p: c.mean().mean(axis=1) for p, c in conditionals.treated.items()}
    control = {p: c.mean().mean(axis=1) for p, c in conditionals.control.items()}
    return treated, control


def mediation_effects(
    draw: PosteriorDraw,
    dataset: Dataset,
    n_mc: int,
    rng: np.random.Generator,
    nie_star: bool = False,
) -> dict[str, float]:
    """All mediation estimands for one posterior draw."""
    if n_mc < 1:
        raise InvalidParameterError("n_mc must be at least 1")
    potential = draw_potential_mediators(draw, dataset.x, n_mc, rng)
    return mediation_effects_from_draws(draw, dataset, potential, nie_star)


def mediation_effects_from_draws(
    draw: PosteriorDraw,
    dataset: Dataset,
    potential: NDArray,
    nie_star: bool = False,
) -> dict[str, float]:
    k = draw.n_mediators
    conditionals = pattern_conditionals(
        draw, potential, dataset.x, required_patterns(k), control_patterns(k, nie_star)
    )
    treated, control = unit_means(conditionals)
    return effects_from_pattern_means(treated, control, k, nie_star)
