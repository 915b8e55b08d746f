"""Monte Carlo ground truth of every mediation estimand for a scenario."""

from __future__ import annotations

import logging

import numpy as np

from ..effects import control_patterns, effects_from_pattern_means, required_patterns
from ..errors import InvalidParameterError
from .scenarios import N_MEDIATORS, Scenario, draw_covariates, draw_world_mediators, outcome_mean

logger = logging.getLogger(__name__)

DEFAULT_TRUTH_DRAWS = 1_000_000


def truth_oracle(
    scenario: Scenario,
    rng: np.random.Generator,
    n_mc: int = DEFAULT_TRUTH_DRAWS,
    nie_star: bool = False,
) -> dict[str, float]:
    """Brute-force averages of the noise-free potential-outcome means.

    Cross-world mediators follow the scenario's coupling (independent given x by default).
    """
    if n_mc < 1:
        raise InvalidParameterError("n_mc must be at least 1")
    x = draw_covariates(n_mc, rng)
    m0, m1 = draw_world_mediators(scenario, x, rng)
    case = scenario.interaction_case

    def mediators(pattern: tuple[int, ...]) -> np.ndarray:
        return np.where(np.asarray(pattern, dtype=bool), m1, m0)

    treated = {p: outcome_mean(1, mediators(p), x, case) for p in required_patterns(N_MEDIATORS)}
    control = {
        p: outcome_mean(0, mediators(p), x, case)
        for p in control_patterns(N_MEDIATORS, nie_star)
    }
    truth = effects_from_pattern_means(treated, control, N_MEDIATORS, nie_star)
    logger.info(
        "Truth for %s (%s), %d draws: TE=%.3f NDE=%.3f JNIE=%.3f",
        scenario.name,
        scenario.label,
        n_mc,
        truth["TE"],
        truth["NDE"],
        truth["JNIE"],
    )
    return truth
