"""Causal estimands computed from posterior draws."""

from .cep import cep_surface, default_grid
from .mediation import (
    Pattern,
    control_patterns,
    effects_from_pattern_means,
    estimand_names,
    mediation_effects,
    mediation_effects_from_draws,
    pattern_conditionals,
    potential_draws,
    required_patterns,
    switched,
    treated_pattern,
    unit_means,
)
from .principal import (
    Stratum,
    Thresholds,
    classify_changes,
    pooled_change_sd,
    principal_effects,
    strata_cross_table,
    stratum_effects,
    subset_label,
    subsets,
    unit_effects,
)
from .summary import EffectSummary, map_draws, posterior_effects, summarize

__all__ = [
    "EffectSummary",
    "Pattern",
    "Stratum",
    "Thresholds",
    "cep_surface",
    "classify_changes",
    "control_patterns",
    "default_grid",
    "effects_from_pattern_means",
    "estimand_names",
    "map_draws",
    "mediation_effects",
    "mediation_effects_from_draws",
    "pattern_conditionals",
    "pooled_change_sd",
    "posterior_effects",
    "potential_draws",
    "principal_effects",
    "required_patterns",
    "strata_cross_table",
    "stratum_effects",
    "subset_label",
    "subsets",
    "summarize",
    "switched",
    "treated_pattern",
    "unit_effects",
    "unit_means",
]
