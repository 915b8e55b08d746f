"""Seeded samplers and density primitives."""

from .discrete import (
    categorical_from_logits,
    cluster_counts,
    sample_concentration,
    sample_stick_fractions,
    stick_weights,
)
from .mvn import (
    MultivariateNormal,
    cholesky_or_raise,
    conditional_coefficients,
    inverse_wishart,
    inverse_wishart_logpdf,
    mahalanobis,
    wishart,
)
from .rng import (
    BOOTSTRAP_STREAM,
    CEP_STREAM,
    CHAIN_STREAM,
    EFFECTS_STREAM,
    PARAMETRIC_STREAM,
    PREDICTIVE_STREAM,
    SIMULATION_STREAM,
    RngStream,
)
from .truncnorm import (
    CDF_CLAMP,
    TruncatedNormal,
    latent_scores,
    sample_truncnorm,
    truncnorm_cdf,
    truncnorm_logpdf,
    truncnorm_pdf,
    truncnorm_ppf,
)

__all__ = [
    "BOOTSTRAP_STREAM",
    "CDF_CLAMP",
    "CEP_STREAM",
    "CHAIN_STREAM",
    "EFFECTS_STREAM",
    "PARAMETRIC_STREAM",
    "PREDICTIVE_STREAM",
    "SIMULATION_STREAM",
    "MultivariateNormal",
    "RngStream",
    "TruncatedNormal",
    "categorical_from_logits",
    "cholesky_or_raise",
    "cluster_counts",
    "conditional_coefficients",
    "inverse_wishart",
    "inverse_wishart_logpdf",
    "latent_scores",
    "mahalanobis",
    "sample_concentration",
    "sample_stick_fractions",
    "sample_truncnorm",
    "stick_weights",
    "truncnorm_cdf",
    "truncnorm_logpdf",
    "truncnorm_pdf",
    "truncnorm_ppf",
    "wishart",
]
