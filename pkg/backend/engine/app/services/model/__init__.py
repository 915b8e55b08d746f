"""Core domain types, configuration and dataset validation."""

from .config import ChainConfig, HyperpriorVariant, SensitivityConfig
from .params import MarginalParams, OutcomeParams
from .types import (
    IDENTITY_TRANSFORM,
    LOG_TRANSFORM,
    CorrelationMatrix,
    Dataset,
    ObservedUnit,
    PosteriorDraw,
    PotentialMediatorState,
    PriorMode,
    coordinate,
)
from .validation import validate_dataset

__all__ = [
    "IDENTITY_TRANSFORM",
    "LOG_TRANSFORM",
    "ChainConfig",
    "CorrelationMatrix",
    "Dataset",
    "HyperpriorVariant",
    "MarginalParams",
    "ObservedUnit",
    "OutcomeParams",
    "PosteriorDraw",
    "PotentialMediatorState",
    "PriorMode",
    "SensitivityConfig",
    "coordinate",
    "validate_dataset",
]
