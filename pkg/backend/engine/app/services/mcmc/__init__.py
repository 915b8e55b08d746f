"""MCMC kernels: marginal DPMs, copula, imputation, outcome DPM and the chain driver."""

from .acceptance import BLOCKS, AcceptanceCounter, accept, acceptance_probability
from .chain import ChainResult, coordinate_labels, fit_marginal, run_chain
from .copula import (
    PdInterval,
    build_constrained_R,
    copula_loglik,
    init_correlation,
    pd_interval,
    step2_sample_R,
)
from .imputation import (
    draw_counterfactual_mediators,
    draw_potential_mediators,
    initial_potential_state,
    step3_impute,
)
from .marginal import (
    AdaptiveCovariance,
    MarginalHypers,
    MarginalMixture,
    MarginalState,
    init_marginal_state,
    latent_column,
    log_prior,
    marginal_logpost,
    marginal_mixture,
    step1_sweep,
)
from .outcome import (
    ConditionalOutcome,
    OutcomeDpmState,
    OutcomeRegression,
    conditional_outcome_density,
    init_outcome_state,
    regression_inputs,
    step4_sweep,
)

__all__ = [
    "BLOCKS",
    "AcceptanceCounter",
    "AdaptiveCovariance",
    "ChainResult",
    "ConditionalOutcome",
    "MarginalHypers",
    "MarginalMixture",
    "MarginalState",
    "OutcomeDpmState",
    "OutcomeRegression",
    "PdInterval",
    "accept",
    "acceptance_probability",
    "build_constrained_R",
    "conditional_outcome_density",
    "coordinate_labels",
    "copula_loglik",
    "draw_counterfactual_mediators",
    "draw_potential_mediators",
    "fit_marginal",
    "init_correlation",
    "init_marginal_state",
    "init_outcome_state",
    "initial_potential_state",
    "latent_column",
    "log_prior",
    "marginal_logpost",
    "marginal_mixture",
    "pd_interval",
    "regression_inputs",
    "run_chain",
    "step1_sweep",
    "step2_sample_R",
    "step3_impute",
    "step4_sweep",
]
