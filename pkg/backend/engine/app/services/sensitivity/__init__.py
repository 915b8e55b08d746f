"""Sensitivity of mediation effects to cross-world ignorability."""

from .analysis import (
    ChiBounds,
    SensitivityResult,
    chi_bounds,
    chi_label,
    sensitivity_effects,
    switched_set,
)
from .dstats import (
    SubsetDistance,
    d_statistics,
    difference_correlation,
    difference_covariance,
    subset_threshold,
)
from .tilt import Standardizer, tilted_conditional_density

__all__ = [
    "ChiBounds",
    "SensitivityResult",
    "Standardizer",
    "SubsetDistance",
    "chi_bounds",
    "chi_label",
    "d_statistics",
    "difference_correlation",
    "difference_covariance",
    "sensitivity_effects",
    "subset_threshold",
    "switched_set",
    "tilted_conditional_density",
]
