"""Chain and sensitivity configuration models."""

from __future__ import annotations

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .types import PriorMode


class HyperpriorVariant(str, Enum):
    """Rule for the rate b* of the Gamma prior on the intercept precision S."""

    DATA_SCALED = "data_scaled"  # b* = a* . var / 2
    FIXED_100 = "fixed_100"  # b* = 100 . a*


DEFAULT_EPSILONS = (0.5, 1.0, 1.5, 2.0)


class SensitivityConfig(BaseModel):
    """Grid of (epsilon, chi) values for the exponential-tilt analysis."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilons: list[float] = Field(default_factory=lambda: list(DEFAULT_EPSILONS))
    chi: list[list[float]] = Field(default_factory=list)
    y_star: float | None = None

    @field_validator("epsilons")
    @classmethod
    def _positive_epsilons(cls, values: list[float]) -> list[float]:
        if any(not (v > 0 or math.isinf(v)) for v in values):
            raise ValueError("epsilon values must be positive")
        return values

    @field_validator("chi")
    @classmethod
    def _chi_at_least_one(cls, values: list[list[float]]) -> list[list[float]]:
        for vector in values:
            if not vector or any(c < 1.0 for c in vector):
                raise ValueError("chi vectors must be non-empty with every entry >= 1")
        return values


class ChainConfig(BaseModel):
    """MCMC schedule, priors and effect thresholds."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_iter: int = Field(default=10_000, ge=1)
    n_burn: int = Field(default=2_500, ge=0)
    thin: int = Field(default=5, ge=1)
    k_max: int = Field(default=8, ge=2)
    seed: int = Field(default=20_160_101, ge=0)
    prior_mode: PriorMode = PriorMode.RHO_CONSTRAINED
    dissociative_multiplier: float = Field(default=0.25, ge=0.0)
    associative_multiplier: float = Field(default=0.25, ge=0.0)
    sensitivity: SensitivityConfig | None = None

    hyperprior_variant: HyperpriorVariant = HyperpriorVariant.DATA_SCALED
    outcome_truncation: int = Field(default=20, ge=2)
    tau_proposal_concentration: float = Field(default=100.0, gt=0.0)
    imputation_step_scale: float = Field(default=0.5, ge=0.0)
    beta_prior_sd: float = Field(default=10.0, gt=0.0)
    log_every: int = Field(default=500, ge=1)

    @model_validator(mode="after")
    def _burn_before_end(self) -> ChainConfig:
        if self.n_burn >= self.n_iter:
            raise ValueError(f"n_burn ({self.n_burn}) must be below n_iter ({self.n_iter})")
        return self

    @model_validator(mode="after")
    def _associative_above_dissociative(self) -> ChainConfig:
        if self.associative_multiplier < self.dissociative_multiplier:
            raise ValueError(
                f"associative_multiplier ({self.associative_multiplier}) must be at least "
                f"dissociative_multiplier ({self.dissociative_multiplier})"
            )
        return self

    def is_retained(self, iteration: int) -> bool:
        """Iterations are 1-based; keep every ``thin``-th one after burn-in."""
        return iteration > self.n_burn and (iteration - self.n_burn) % self.thin == 0

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.n_burn) // self.thin
