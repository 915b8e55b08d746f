"""Gaussian copula likelihood and correlation-matrix updates."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import IncompatibleCorrelationError, MalformedCorrelationError
from ..model import CorrelationMatrix, PriorMode
from .acceptance import AcceptanceCounter, accept

logger = logging.getLogger(__name__)

DEFAULT_RHO = 0.5


@dataclass(frozen=True, slots=True)
class PdInterval:
    """Open interval of values for one entry that keeps the matrix PD."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise MalformedCorrelationError(f"empty PD interval ({self.lo}, {self.hi})")

    def __contains__(self, value: float) -> bool:
        return self.lo < value < self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def truncated_below(self, bound: float) -> PdInterval | None:
        lo = max(self.lo, bound)
        return PdInterval(lo, self.hi) if lo < self.hi else None

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))


def _values(r: CorrelationMatrix | ArrayLike) -> NDArray:
    if isinstance(r, CorrelationMatrix):
        return r.values
    return np.atleast_2d(np.asarray(r, dtype=float))


def copula_loglik(h: ArrayLike, r: CorrelationMatrix) -> float:
    """-(n/2) log|R| + 1/2 sum_i h_i' (I - R^-1) h_i.

    The marginal density terms are not included.
    """
    h = np.asarray(h, dtype=float).reshape(-1, r.dim)
    gram = h.T @ h
    return _loglik_from_gram(gram, h.shape[0], r)


def _loglik_from_gram(gram: NDArray, n: int, r: CorrelationMatrix) -> float:
    coupling = np.eye(r.dim) - r.inverse
    return float(-0.5 * n * r.log_det + 0.5 * np.sum(coupling * gram))


def pd_interval(r: CorrelationMatrix | ArrayLike, entry: tuple[int, int]) -> PdInterval:
    """Range of entry ``(j, k)`` with every other entry held fixed.

    det R(v) is a quadratic in v with negative leading coefficient, so the
    admissible set is the interval between its two real roots.
    """
    values = _values(r).copy()
    j, k = entry
    if j == k:
        raise MalformedCorrelationError("diagonal entries are fixed at 1")

    def det_at(v: float) -> float:
        values[j, k] = values[k, j] = v
        return float(np.linalg.det(values))

    at_minus, at_zero, at_plus = det_at(-1.0), det_at(0.0), det_at(1.0)
    a = 0.5 * (at_plus + at_minus) - at_zero
    b = 0.5 * (at_plus - at_minus)
    c = at_zero
    disc = b * b - 4.0 * a * c
    if not a < 0 or not disc > 0:
        raise MalformedCorrelationError(
            f"no positive-definite completion for entry ({j}, {k}): a={a:.3e}, disc={disc:.3e}"
        )
    root = np.sqrt(disc)
    lo, hi = sorted(((-b + root) / (2.0 * a), (-b - root) / (2.0 * a)))
    return PdInterval(max(lo, -1.0), min(hi, 1.0))


def build_constrained_R(within_arm_corrs: Sequence[ArrayLike], rho: float) -> CorrelationMatrix:
    """Assemble R with cross entries rho * (r_jk(0) + r_jk(1)) / 2.

    Raises:
        IncompatibleCorrelationError: when the assembled matrix is not PD.
    """
    if len(within_arm_corrs) != 2:
        raise MalformedCorrelationError("one within-arm block is needed per arm")
    block0, block1 = (np.atleast_2d(np.asarray(b, dtype=float)) for b in within_arm_corrs)
    if block0.shape != block1.shape or block0.shape[0] != block0.shape[1]:
        raise MalformedCorrelationError("within-arm blocks must be square and of equal size")
    k = block0.shape[0]
    cross = rho * (block0 + block1) / 2.0
    values = np.empty((2 * k, 2 * k))
    values[:k, :k] = block0
    values[k:, k:] = block1
    values[:k, k:] = cross
    values[k:, :k] = cross.T
    try:
        return CorrelationMatrix(values, PriorMode.RHO_CONSTRAINED, float(rho))
    except MalformedCorrelationError as exc:
        raise IncompatibleCorrelationError(
            f"within-arm correlations are incompatible with rho={rho:.4f}: {exc.detail}"
        ) from exc


def init_correlation(prior_mode: PriorMode, n_mediators: int) -> CorrelationMatrix:
    if prior_mode is PriorMode.UNIFORM:
        return CorrelationMatrix.identity(n_mediators)
    eye = np.eye(n_mediators)
    return build_constrained_R((eye, eye), DEFAULT_RHO)


def step2_sample_R(
    r: CorrelationMatrix,
    h: ArrayLike,
    rng: np.random.Generator,
    acceptance: AcceptanceCounter | None = None,
) -> CorrelationMatrix:
    """One Metropolis sweep over the free entries of R (row-major upper triangle)."""
    h = np.asarray(h, dtype=float).reshape(-1, r.dim)
    gram = h.T @ h
    n = h.shape[0]
    acceptance = acceptance if acceptance is not None else AcceptanceCounter()
    if r.prior_mode is PriorMode.UNIFORM:
        return _sweep_uniform(r, gram, n, rng, acceptance)
    return _sweep_constrained(r, gram, n, rng, acceptance)


def _metropolis(
    current: CorrelationMatrix,
    proposal: CorrelationMatrix | None,
    gram: NDArray,
    n: int,
    rng: np.random.Generator,
    acceptance: AcceptanceCounter,
) -> CorrelationMatrix:
    if proposal is None:
        acceptance.record("step2", False)
        return current
    log_ratio = _loglik_from_gram(gram, n, proposal) - _loglik_from_gram(gram, n, current)
    accepted = accept(rng, log_ratio)
    acceptance.record("step2", accepted)
    return proposal if accepted else current


def _sweep_uniform(
    r: CorrelationMatrix,
    gram: NDArray,
    n: int,
    rng: np.random.Generator,
    acceptance: AcceptanceCounter,
) -> CorrelationMatrix:
    for j, k in zip(*np.triu_indices(r.dim, k=1), strict=True):
        interval = pd_interval(r, (j, k))
        try:
            proposal = r.with_entry(j, k, interval.sample(rng))
        except MalformedCorrelationError:
            proposal = None
        r = _metropolis(r, proposal, gram, n, rng, acceptance)
    return r


def _sweep_constrained(
    r: CorrelationMatrix,
    gram: NDArray,
    n: int,
    rng: np.random.Generator,
    acceptance: AcceptanceCounter,
) -> CorrelationMatrix:
    k_med = r.n_mediators
    for arm in (0, 1):
        for j, k in zip(*np.triu_indices(k_med, k=1), strict=True):
            blocks = [r.within(0), r.within(1)]
            interval = pd_interval(blocks[arm], (j, k)).truncated_below(0.0)
            proposal = None
            if interval is not None:
                value = interval.sample(rng)
                blocks[arm][j, k] = blocks[arm][k, j] = value
                try:
                    proposal = build_constrained_R(blocks, r.rho)
                except IncompatibleCorrelationError:
                    proposal = None
            r = _metropolis(r, proposal, gram, n, rng, acceptance)

    try:
        proposal = build_constrained_R((r.within(0), r.within(1)), float(rng.uniform()))
    except IncompatibleCorrelationError:
        proposal = None
    return _metropolis(r, proposal, gram, n, rng, acceptance)
