"""Domain types shared by every stage of the engine.

Mediator coordinates of the potential-mediator vector are arm-major:
``(M_1(0), ..., M_K(0), M_1(1), ..., M_K(1))``, so coordinate ``j`` belongs
to arm ``j // K`` and mediator ``j % K``.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from ..distributions.mvn import cholesky_or_raise
from ..errors import InvalidParameterError, MalformedCorrelationError, NotPositiveDefiniteError
from .params import MarginalParams, OutcomeParams


class PriorMode(str, Enum):
    """Prior on the copula correlation matrix."""

    UNIFORM = "uniform"
    RHO_CONSTRAINED = "rho_constrained"


IDENTITY_TRANSFORM = "identity"
LOG_TRANSFORM = "log"


def frozen_array(values: object, dtype: type = float) -> NDArray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def coordinate(arm: int, mediator: int, n_mediators: int) -> int:
    return arm * n_mediators + mediator


@dataclass(frozen=True, slots=True)
class ObservedUnit:
    z: int
    m: tuple[float, ...]
    y: float
    x: tuple[float, ...]


@dataclass(frozen=True, slots=True, eq=False)
class Dataset:
    """Column-oriented analysis data; invariants are checked by ``validate_dataset``."""

    z: NDArray
    m: NDArray
    y: NDArray
    x: NDArray
    lower_bound: float = 0.0
    ids: tuple[str, ...] = ()
    mediator_names: tuple[str, ...] = ()
    covariate_names: tuple[str, ...] = ()
    mediator_transforms: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        z = frozen_array(self.z, dtype=int).reshape(-1)
        n = z.size
        m = frozen_array(self.m).reshape(n, -1) if n else frozen_array(self.m)
        x = np.asarray(self.x, dtype=float)
        x = frozen_array(x.reshape(n, -1) if x.size else np.zeros((n, 0)))
        y = frozen_array(self.y).reshape(-1)
        if m.ndim != 2 or y.size != n:
            raise InvalidParameterError("z, m, y and x must describe the same units")
        k = m.shape[1]
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "lower_bound", float(self.lower_bound))
        object.__setattr__(self, "ids", tuple(self.ids) or tuple(str(i + 1) for i in range(n)))
        object.__setattr__(
            self,
            "mediator_names",
            tuple(self.mediator_names) or tuple(f"m{i + 1}" for i in range(k)),
        )
        object.__setattr__(
            self,
            "covariate_names",
            tuple(self.covariate_names) or tuple(f"x{i + 1}" for i in range(x.shape[1])),
        )
        object.__setattr__(
            self,
            "mediator_transforms",
            tuple(self.mediator_transforms) or (IDENTITY_TRANSFORM,) * k,
        )

    @classmethod
    def from_units(cls, units: Iterable[ObservedUnit], lower_bound: float = 0.0) -> Dataset:
        units = list(units)
        return cls(
            z=[u.z for u in units],
            m=[list(u.m) for u in units],
            y=[u.y for u in units],
            x=[list(u.x) for u in units],
            lower_bound=lower_bound,
        )

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def k(self) -> int:
        return self.m.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def units(self) -> list[ObservedUnit]:
        return [
            ObservedUnit(int(z), tuple(m.tolist()), float(y), tuple(x.tolist()))
            for z, m, y, x in zip(self.z, self.m, self.y, self.x, strict=True)
        ]

    def arm(self, z: int) -> NDArray:
        """Indices of units assigned to arm ``z``."""
        return np.flatnonzero(self.z == z)

    def observed_mask(self) -> NDArray:
        treated = (self.z == 1)[:, None]
        return np.hstack([np.repeat(~treated, self.k, axis=1), np.repeat(treated, self.k, axis=1)])

    def select_mediators(self, indices: Sequence[int]) -> Dataset:
        """Dataset restricted to a subset of mediators (single-mediator analyses)."""
        indices = list(indices)
        return Dataset(
            z=self.z,
            m=self.m[:, indices],
            y=self.y,
            x=self.x,
            lower_bound=self.lower_bound,
            ids=self.ids,
            mediator_names=tuple(self.mediator_names[i] for i in indices),
            covariate_names=self.covariate_names,
            mediator_transforms=tuple(self.mediator_transforms[i] for i in indices),
        )


@dataclass(frozen=True, slots=True, eq=False)
class PotentialMediatorState:
    """Observed half plus imputed half of every unit's 2K vector, with latent scores."""

    t: NDArray
    h: NDArray
    observed_mask: NDArray

    def __post_init__(self) -> None:
        t = frozen_array(self.t)
        h = frozen_array(self.h)
        mask = frozen_array(self.observed_mask, dtype=bool)
        if t.shape != h.shape or t.shape != mask.shape or t.shape[1] % 2:
            raise InvalidParameterError("t, h and mask must share an (n, 2K) shape")
        if np.any(mask.sum(axis=1) != t.shape[1] // 2):
            raise InvalidParameterError("each unit must have exactly K observed coordinates")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "observed_mask", mask)

    @property
    def n_mediators(self) -> int:
        return self.t.shape[1] // 2

    def with_column(self, j: int, t_column: NDArray, h_column: NDArray) -> PotentialMediatorState:
        t = self.t.copy()
        h = self.h.copy()
        t[:, j] = t_column
        h[:, j] = h_column
        return PotentialMediatorState(t, h, self.observed_mask)

    def with_scores(self, j: int, h_column: NDArray) -> PotentialMediatorState:
        return self.with_column(j, self.t[:, j], h_column)

    def for_unit(self, i: int) -> tuple[NDArray, NDArray, NDArray]:
        return self.t[i], self.h[i], self.observed_mask[i]


@dataclass(frozen=True, slots=True, eq=False)
class CorrelationMatrix:
    """Copula correlation over the 2K potential-mediator coordinates."""

    values: NDArray
    prior_mode: PriorMode = PriorMode.UNIFORM
    rho: float | None = None
    inverse: NDArray = field(init=False, repr=False)
    log_det: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] % 2:
            raise MalformedCorrelationError(f"expected a 2K x 2K matrix, got {values.shape}")
        if not np.array_equal(values, values.T):
            raise MalformedCorrelationError("correlation matrix must be symmetric")
        if not np.all(np.diag(values) == 1.0):
            raise MalformedCorrelationError("correlation diagonal must be exactly 1")
        if self.prior_mode is PriorMode.RHO_CONSTRAINED:
            if self.rho is None or not 0.0 <= self.rho <= 1.0:
                raise MalformedCorrelationError("rho_constrained mode needs rho in [0, 1]")
        try:
            chol = cholesky_or_raise(values, "correlation matrix")
        except NotPositiveDefiniteError as exc:
            raise MalformedCorrelationError(exc.detail) from exc
        eye = np.eye(values.shape[0])
        inverse = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
        values.setflags(write=False)
        inverse = 0.5 * (inverse + inverse.T)
        inverse.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "inverse", inverse)
        object.__setattr__(self, "log_det", float(2.0 * np.sum(np.log(np.diag(chol)))))

    @classmethod
    def identity(cls, n_mediators: int) -> CorrelationMatrix:
        return cls(np.eye(2 * n_mediators))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def n_mediators(self) -> int:
        return self.dim // 2

    def within(self, arm: int) -> NDArray:
        k = self.n_mediators
        block = slice(arm * k, (arm + 1) * k)
        return self.values[block, block].copy()

    def cross(self) -> NDArray:
        k = self.n_mediators
        return self.values[:k, k:].copy()

    def with_entry(self, j: int, k: int, value: float) -> CorrelationMatrix:
        values = self.values.copy()
        values[j, k] = values[k, j] = value
        return CorrelationMatrix(values, self.prior_mode, self.rho)


@dataclass(frozen=True, slots=True, eq=False)
class PosteriorDraw:
    """One retained chain state; never mutated after recording."""

    iteration: int
    rng_position: tuple[int, int, int, int]
    marginals: tuple[MarginalParams, ...]
    correlation: CorrelationMatrix
    outcomes: tuple[OutcomeParams, OutcomeParams]
    mediators: NDArray

    def __post_init__(self) -> None:
        mediators = frozen_array(self.mediators)
        if mediators.ndim != 2 or mediators.shape[1] != len(self.marginals):
            raise InvalidParameterError("one marginal is needed per potential-mediator coordinate")
        if self.correlation.dim != len(self.marginals):
            raise InvalidParameterError("correlation size does not match the marginals")
        object.__setattr__(self, "mediators", mediators)
        object.__setattr__(self, "marginals", tuple(self.marginals))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    @property
    def n_mediators(self) -> int:
        return len(self.marginals) // 2

    @property
    def mediator_changes(self) -> NDArray:
        """Unit-level M(1) - M(0) under this draw's imputations."""
        k = self.n_mediators
        return self.mediators[:, k:] - self.mediators[:, :k]
