"""Replication study: bias and MSE of the nonparametric fit and the regression baseline."""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..distributions import BOOTSTRAP_STREAM, SIMULATION_STREAM, RngStream
from ..effects import posterior_effects
from ..errors import EngineError
from ..mcmc import run_chain
from ..model import ChainConfig
from .baseline import DEFAULT_BOOTSTRAP, parametric_baseline
from .scenarios import CorrelationCase, InteractionCase, Scenario, generate_scenario
from .truth import DEFAULT_TRUTH_DRAWS, truth_oracle

logger = logging.getLogger(__name__)

METHOD_BNP = "bnp"
METHOD_BASELINE = "regression"
TABLE_COLUMNS = [
    "corr_case",
    "interaction_case",
    "estimand",
    "method",
    "truth",
    "bias",
    "mse",
    "n_reps",
    "n_failed",
]

_TRUTH_KEY = 0
_REPLICATION_KEY = 1


def harness_chain_config() -> ChainConfig:
    return ChainConfig(n_iter=2000, n_burn=500, thin=3)


class HarnessConfig(BaseModel):
    """Replication counts and per-replication fitting settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_reps: int = Field(default=25, ge=1)
    n: int = Field(default=500, ge=2)
    n_mc: int = Field(default=20, ge=1)
    n_boot: int = Field(default=DEFAULT_BOOTSTRAP, ge=1)
    truth_draws: int = Field(default=DEFAULT_TRUTH_DRAWS, ge=1)
    seed: int = Field(default=0, ge=0)
    cross_world_correlation: float = Field(default=0.0, ge=0.0, lt=1.0)
    chain: ChainConfig = Field(default_factory=harness_chain_config)

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(slots=True)
class ReplicationResult:
    index: int
    estimates: dict[str, dict[str, float]] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)


def run_replication(scenario: Scenario, index: int, config: HarnessConfig) -> ReplicationResult:
    """Generate one dataset and estimate every effect with both methods.

    Module level so that worker processes can pickle it. A method that fails is
    recorded with its error and left out of that method's averages.
    """
    stream = RngStream(config.seed, (SIMULATION_STREAM, _REPLICATION_KEY, index))
    rng = stream.generator
    data = generate_scenario(scenario, config.n, rng)
    result = ReplicationResult(index)
    chain_seed = int(rng.integers(0, 2**32))

    try:
        chain = run_chain(data.dataset, config.chain.model_copy(update={"seed": chain_seed}))
        summary = posterior_effects(
            chain.draws,
            data.dataset,
            n_mc=config.n_mc,
            seed=chain_seed,
            dissociative_multiplier=config.chain.dissociative_multiplier,
            associative_multiplier=config.chain.associative_multiplier,
            strata_pair=None,
        )
        means = summary.mediation.set_index("estimand")["mean"]
        result.estimates[METHOD_BNP] = {name: float(v) for name, v in means.items()}
    except (EngineError, np.linalg.LinAlgError) as exc:
        result.errors[METHOD_BNP] = str(exc)

    try:
        boot_rng = RngStream(config.seed, (BOOTSTRAP_STREAM, index)).generator
        baseline = parametric_baseline(data.dataset, boot_rng, config.n_boot)
        result.estimates[METHOD_BASELINE] = dict(
            zip(baseline["estimand"], baseline["estimate"].astype(float), strict=True)
        )
    except (EngineError, np.linalg.LinAlgError) as exc:
        result.errors[METHOD_BASELINE] = str(exc)

    for method, message in result.errors.items():
        logger.warning("Replication %d: %s failed: %s", index, method, message)
    return result


def bias_mse_table(
    scenario: Scenario,
    truth: dict[str, float],
    replications: Iterable[ReplicationResult],
    n_reps: int,
) -> pd.DataFrame:
    """Mean bias and MSE against ``truth`` per estimand and method."""
    replications = list(replications)
    rows = []
    for method in (METHOD_BNP, METHOD_BASELINE):
        done = [r.estimates[method] for r in replications if method in r.estimates]
        for estimand, true_value in truth.items():
            estimates = np.array([e[estimand] for e in done if estimand in e], dtype=float)
            errors = estimates - true_value
            rows.append(
                {
                    "corr_case": scenario.corr_case.value,
                    "interaction_case": scenario.interaction_case.value,
                    "estimand": estimand,
                    "method": method,
                    "truth": true_value,
                    "bias": float(errors.mean()) if errors.size else np.nan,
                    "mse": float(np.mean(errors**2)) if errors.size else np.nan,
                    "n_reps": int(errors.size),
                    "n_failed": n_reps - len(done),
                }
            )
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def run_scenario(scenario: Scenario, config: HarnessConfig, workers: int = 1) -> pd.DataFrame:
    truth_rng = RngStream(config.seed, (SIMULATION_STREAM, _TRUTH_KEY)).generator
    truth = truth_oracle(scenario, truth_rng, config.truth_draws)
    logger.info("Scenario %s is labelled %s", scenario.name, scenario.label)

    if workers <= 1:
        replications = [run_replication(scenario, i, config) for i in range(config.n_reps)]
    else:
        results: dict[int, ReplicationResult] = {}
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(run_replication, scenario, i, config): i
                for i in range(config.n_reps)
            }
            for done, future in enumerate(as_completed(futures), start=1):
                results[futures[future]] = future.result()
                logger.info("Replication %d/%d done", done, config.n_reps)
        replications = [results[i] for i in range(config.n_reps)]
    return bias_mse_table(scenario, truth, replications, config.n_reps)


def replication_harness(
    config: HarnessConfig,
    corr_cases: Iterable[CorrelationCase] = tuple(CorrelationCase),
    interaction_cases: Iterable[InteractionCase] = (InteractionCase.SINGLE, InteractionCase.DOUBLE),
    workers: int = 1,
) -> pd.DataFrame:
    """Bias/MSE table over every requested (correlation, interaction) scenario."""
    tables = []
    for corr_case, interaction_case in itertools.product(corr_cases, interaction_cases):
        scenario = Scenario(corr_case, interaction_case, config.cross_world_correlation)
        logger.info(
            "Running %d replications of %s (n=%d)", config.n_reps, scenario.name, config.n
        )
        tables.append(run_scenario(scenario, config, workers))
    return pd.concat(tables, ignore_index=True)
