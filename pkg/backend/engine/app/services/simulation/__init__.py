"""Synthetic scenarios, ground truth, regression baseline and the replication harness."""

from .baseline import baseline_point, ols, parametric_baseline
from .harness import (
    METHOD_BASELINE,
    METHOD_BNP,
    TABLE_COLUMNS,
    HarnessConfig,
    ReplicationResult,
    bias_mse_table,
    harness_chain_config,
    replication_harness,
    run_replication,
    run_scenario,
)
from .scenarios import (
    CorrelationCase,
    InteractionCase,
    Scenario,
    SimulatedData,
    draw_covariates,
    draw_world_mediators,
    generate_scenario,
    mediator_covariance,
    mediator_means,
    outcome_mean,
)
from .truth import truth_oracle

__all__ = [
    "METHOD_BASELINE",
    "METHOD_BNP",
    "TABLE_COLUMNS",
    "CorrelationCase",
    "HarnessConfig",
    "InteractionCase",
    "ReplicationResult",
    "Scenario",
    "SimulatedData",
    "baseline_point",
    "bias_mse_table",
    "draw_covariates",
    "draw_world_mediators",
    "generate_scenario",
    "harness_chain_config",
    "mediator_covariance",
    "mediator_means",
    "ols",
    "outcome_mean",
    "parametric_baseline",
    "replication_harness",
    "run_replication",
    "run_scenario",
    "truth_oracle",
]
