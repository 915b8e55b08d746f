"""Synthetic three-mediator data with known potential outcomes."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import InvalidParameterError
from ..model import Dataset

logger = logging.getLogger(__name__)

N_MEDIATORS = 3

COVARIATE_MEANS = np.array([1.5, -1.5, 2.0])
COVARIATE_SDS = np.array([0.3, 0.3, 0.1])

# rows: mediators; columns: intercept, z, x1, x2, x3
MEDIATOR_COEFS = np.array(
    [
        [2.0, 0.4, 0.5, 0.4, 0.5],
        [1.0, 0.4, -0.4, 0.4, -0.5],
        [-0.5, -0.4, 0.5, 0.4, 0.5],
    ]
)

OUTCOME_INTERCEPT = 1.0
OUTCOME_Z = -1.0
OUTCOME_MEDIATOR = 0.8
OUTCOME_COVARIATES = np.array([1.0, 1.0, 0.8])
OUTCOME_SD = 0.1

TREATMENT_PROBABILITY = 0.5


class CorrelationCase(str, Enum):
    UNCORRELATED = "uncorrelated"
    CORRELATED = "correlated"

    @property
    def label(self) -> str:
        return "Case 1" if self is CorrelationCase.UNCORRELATED else "Case 2"


class InteractionCase(str, Enum):
    NONE = "none"
    SINGLE = "single"
    DOUBLE = "double"

    @property
    def label(self) -> str:
        return {"none": "no interaction", "single": "Case A", "double": "Case B"}[self.value]


def mediator_covariance(case: CorrelationCase, z: int) -> NDArray:
    """0.64 / 0.04 variances; 0.128 / 0.01 covariances when correlated."""
    variance, covariance = (0.64, 0.128) if z == 1 else (0.04, 0.01)
    if case is CorrelationCase.UNCORRELATED:
        covariance = 0.0
    cov = np.full((N_MEDIATORS, N_MEDIATORS), covariance)
    np.fill_diagonal(cov, variance)
    return cov


def mediator_means(z: int, x: ArrayLike) -> NDArray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    design = np.column_stack([np.ones(x.shape[0]), np.full(x.shape[0], z), x])
    return design @ MEDIATOR_COEFS.T


def interaction(m: NDArray, case: InteractionCase) -> NDArray:
    """h(m) for mediator values in the trailing axis."""
    if case is InteractionCase.NONE:
        return np.zeros(m.shape[:-1])
    h = 1.5 * m[..., 0] * m[..., 1]
    if case is InteractionCase.DOUBLE:
        h = h + 0.6 * m[..., 1] * m[..., 2]
    return h


def outcome_mean(z: int | NDArray, m: NDArray, x: NDArray, case: InteractionCase) -> NDArray:
    """E[Y(z; m) | x]; ``m`` may mix mediators from both worlds."""
    return (
        OUTCOME_INTERCEPT
        + OUTCOME_Z * np.asarray(z, dtype=float)
        + OUTCOME_MEDIATOR * m.sum(axis=-1)
        + interaction(m, case)
        + x @ OUTCOME_COVARIATES
    )


@dataclass(frozen=True, slots=True)
class Scenario:
    corr_case: CorrelationCase
    interaction_case: InteractionCase
    cross_world_correlation: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.cross_world_correlation < 1.0:
            raise InvalidParameterError("cross-world correlation must lie in [0, 1)")

    @property
    def name(self) -> str:
        return f"{self.corr_case.value}/{self.interaction_case.value}"

    @property
    def label(self) -> str:
        return f"{self.corr_case.label}/{self.interaction_case.label}"


def draw_covariates(n: int, rng: np.random.Generator) -> NDArray:
    return COVARIATE_MEANS + COVARIATE_SDS * rng.standard_normal((n, COVARIATE_MEANS.size))


def draw_world_mediators(
    scenario: Scenario, x: NDArray, rng: np.random.Generator
) -> tuple[NDArray, NDArray]:
    """Both worlds' mediators; standardized noises share correlation c per mediator."""
    n = x.shape[0]
    c = scenario.cross_world_correlation
    chol0 = np.linalg.cholesky(mediator_covariance(scenario.corr_case, 0))
    chol1 = np.linalg.cholesky(mediator_covariance(scenario.corr_case, 1))
    u0 = rng.standard_normal((n, N_MEDIATORS))
    u1 = rng.standard_normal((n, N_MEDIATORS))
    m0 = mediator_means(0, x) + u0 @ chol0.T
    m1 = mediator_means(1, x) + (c * u0 + np.sqrt(1.0 - c * c) * u1) @ chol1.T
    return m0, m1


@dataclass(frozen=True, slots=True, eq=False)
class SimulatedData:
    """Observed dataset plus the latent potential mediators and outcomes."""

    scenario: Scenario
    dataset: Dataset
    m0: NDArray
    m1: NDArray
    y0: NDArray
    y1: NDArray


def generate_scenario(scenario: Scenario, n: int, rng: np.random.Generator) -> SimulatedData:
    """Simulate ``n`` units; treatment is Bernoulli(0.5) independent of covariates."""
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    x = draw_covariates(n, rng)
    z = (rng.uniform(size=n) < TREATMENT_PROBABILITY).astype(int)
    m0, m1 = draw_world_mediators(scenario, x, rng)
    y0 = outcome_mean(0, m0, x, scenario.interaction_case) + OUTCOME_SD * rng.standard_normal(n)
    y1 = outcome_mean(1, m1, x, scenario.interaction_case) + OUTCOME_SD * rng.standard_normal(n)
    treated = z == 1
    dataset = Dataset(
        z=z,
        m=np.where(treated[:, None], m1, m0),
        y=np.where(treated, y1, y0),
        x=x,
        lower_bound=-np.inf,
        mediator_names=("m1", "m2", "m3"),
        covariate_names=("x1", "x2", "x3"),
    )
    logger.debug("Simulated %s with n=%d (%d treated)", scenario.name, n, int(treated.sum()))
    return SimulatedData(scenario, dataset, m0, m1, y0, y1)
