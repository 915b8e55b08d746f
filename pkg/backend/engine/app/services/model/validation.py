"""Dataset invariant checks."""

from __future__ import annotations

import numpy as np

from ..errors import DatasetValidationError
from .types import Dataset

ARM_NAMES = {0: "control", 1: "treated"}


def validate_dataset(raw: Dataset) -> Dataset:
    """Return ``raw`` unchanged when every invariant holds.

    Raises:
        DatasetValidationError: listing every violating unit and field.
    """
    errors: list[str] = []
    if raw.n == 0:
        raise DatasetValidationError(["dataset has no units"])
    if raw.k == 0:
        errors.append("dataset has no mediators")
    if np.isnan(raw.lower_bound) or raw.lower_bound == np.inf:
        errors.append(f"invalid mediator lower bound {raw.lower_bound}")

    bad_z = np.flatnonzero(~np.isin(raw.z, (0, 1)))
    errors.extend(f"unit {raw.ids[i]}: treatment must be 0 or 1, got {raw.z[i]}" for i in bad_z)
    for arm, name in ARM_NAMES.items():
        if not np.any(raw.z == arm):
            errors.append(f"empty {name} arm")

    for field_name, values in (("mediator", raw.m), ("outcome", raw.y), ("covariate", raw.x)):
        block = values.reshape(raw.n, -1)
        for i, col in zip(*np.nonzero(~np.isfinite(block)), strict=True):
            errors.append(f"unit {raw.ids[i]}: non-finite {field_name} {col + 1}")

    below = np.isfinite(raw.m) & (raw.m < raw.lower_bound)
    for i, k in zip(*np.nonzero(below), strict=True):
        errors.append(
            f"unit {raw.ids[i]}: mediator {k + 1} value {raw.m[i, k]:g} "
            f"below bound {raw.lower_bound:g}"
        )

    if len(set(raw.ids)) != raw.n:
        errors.append("unit ids are not unique")

    if errors:
        raise DatasetValidationError(errors)
    return raw
