"""Model-fit and convergence diagnostics."""

from .dic import dic3, dic_table, margin_loglik, parametric_marginal_draws
from .predictive import (
    PredictiveResult,
    posterior_predictive,
    replicate_draw_indices,
    simulate_observed,
)
from .trace import autocovariance, effective_sample_size, lag1_autocorrelation, trace_summary

__all__ = [
    "PredictiveResult",
    "autocovariance",
    "dic3",
    "dic_table",
    "effective_sample_size",
    "lag1_autocorrelation",
    "margin_loglik",
    "parametric_marginal_draws",
    "posterior_predictive",
    "replicate_draw_indices",
    "simulate_observed",
    "trace_summary",
]
