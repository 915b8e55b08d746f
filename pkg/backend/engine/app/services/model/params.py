"""Parameter snapshots stored in a posterior draw."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


def _frozen(values: object) -> NDArray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True, eq=False)
class MarginalParams:
    """DP mixture of truncated normals for one (mediator, arm) coordinate.

    Component ``c`` has mean ``intercepts[c] + (x - x_center) @ beta`` and
    precision ``precisions[c]``. ``mass``, ``mu``, ``s`` and ``a_star`` are
    the base-measure hyperparameters at the time of the draw.
    """

    intercepts: NDArray
    precisions: NDArray
    weights: NDArray
    beta: NDArray
    x_center: NDArray
    mass: float
    mu: float
    s: float
    a_star: float
    lower: float

    def __post_init__(self) -> None:
        for name in ("intercepts", "precisions", "weights", "beta", "x_center"):
            object.__setattr__(self, name, _frozen(getattr(self, name)).reshape(-1))
        for name in ("mass", "mu", "s", "a_star", "lower"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def k_max(self) -> int:
        return self.intercepts.size

    @property
    def n_covariates(self) -> int:
        return self.beta.size


@dataclass(frozen=True, slots=True, eq=False)
class OutcomeParams:
    """Truncated DP mixture of Gaussians over (Y, M(0,...,0), M(1,...,1), X) for one arm."""

    weights: NDArray
    means: NDArray
    covs: NDArray
    alpha: float
    k0: float
    m1: NDArray
    psi1: NDArray

    def __post_init__(self) -> None:
        weights = _frozen(self.weights).reshape(-1)
        means = _frozen(self.means).reshape(weights.size, -1)
        dim = means.shape[1]
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", _frozen(self.covs).reshape(weights.size, dim, dim))
        object.__setattr__(self, "m1", _frozen(self.m1).reshape(dim))
        object.__setattr__(self, "psi1", _frozen(self.psi1).reshape(dim, dim))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "k0", float(self.k0))

    @property
    def truncation(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]
