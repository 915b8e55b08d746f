"""Per-arm DP mixture of multivariate normals over (Y, T, X).

Rows are ``(y, t_0 .. t_{2K-1}, x_1 .. x_P)``. The joint mixture induces a
locally weighted mixture of normal regressions for Y given the rest, which is
what the imputation and effect stages consume.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg
from scipy.special import logsumexp

from ..distributions import (
    MultivariateNormal,
    categorical_from_logits,
    cholesky_or_raise,
    cluster_counts,
    inverse_wishart,
    inverse_wishart_logpdf,
    sample_concentration,
    sample_stick_fractions,
    stick_weights,
    wishart,
)
from ..errors import InvalidParameterError, OutcomeModelDegenerateError
from ..model import OutcomeParams
from .acceptance import AcceptanceCounter, accept

logger = logging.getLogger(__name__)

IW_DF = 25.0
ALPHA_PRIOR_SHAPE = 10.0
ALPHA_PRIOR_RATE = 1.0
K0_PRIOR_SHAPE = 6.01 / 2.0
K0_PRIOR_RATE = 2.01 / 2.0
COMPONENT_WEIGHT_FLOOR = 1e-10
LAST_WEIGHT_WARNING = 0.01

_LOG_2PI = np.log(2.0 * np.pi)


def inverse_wishart_df(dim: int) -> float:
    if dim >= IW_DF:
        logger.warning(
            "Outcome dimension %d reaches the inverse-Wishart df %.0f; raising df to %d",
            dim,
            IW_DF,
            dim + 2,
        )
        return float(dim + 2)
    return IW_DF


@dataclass(slots=True)
class OutcomeDpmState:
    """Blocked-Gibbs state for one arm, plus the fixed hyper-hyperparameters."""

    labels: NDArray
    fractions: NDArray
    weights: NDArray
    means: NDArray
    covs: NDArray
    alpha: float
    k0: float
    m1: NDArray
    psi1: NDArray
    m2: NDArray
    s2: NDArray
    psi2: NDArray
    nu: float

    @property
    def truncation(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def params(self) -> OutcomeParams:
        return OutcomeParams(
            weights=self.weights,
            means=self.means,
            covs=self.covs,
            alpha=self.alpha,
            k0=self.k0,
            m1=self.m1,
            psi1=self.psi1,
        )

    def copy(self) -> OutcomeDpmState:
        return replace(
            self,
            labels=self.labels.copy(),
            fractions=self.fractions.copy(),
            weights=self.weights.copy(),
            means=self.means.copy(),
            covs=self.covs.copy(),
            m1=self.m1.copy(),
            psi1=self.psi1.copy(),
        )


def psi1_prior_df(dim: int) -> float:
    """Degrees of freedom of the IW(df, psi2) prior on psi1; kept above D - 1."""
    return float(dim + 2) if dim >= IW_DF else IW_DF


def init_outcome_state(
    rows: ArrayLike, truncation: int, rng: np.random.Generator
) -> OutcomeDpmState:
    """Calibrate hypers on the arm's data and spread components over data rows.

    Raises:
        OutcomeModelDegenerateError: when the sample covariance is singular.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n, dim = rows.shape
    if n <= dim:
        raise OutcomeModelDegenerateError(n, dim)
    cov = np.cov(rows, rowvar=False).reshape(dim, dim)
    if np.linalg.matrix_rank(cov) < dim:
        raise OutcomeModelDegenerateError(n, dim)

    nu = inverse_wishart_df(dim)
    m2 = rows.mean(axis=0)
    s2 = 0.5 * cov
    psi1 = max(nu - dim - 1.0, 1.0) * s2
    fractions = np.append(1.0 / (truncation - np.arange(truncation - 1)), 1.0)
    starts = rng.choice(n, size=truncation, replace=n < truncation)
    return OutcomeDpmState(
        labels=np.zeros(n, dtype=int),
        fractions=fractions,
        weights=stick_weights(fractions),
        means=rows[starts].copy(),
        covs=np.repeat(cov[None], truncation, axis=0),
        alpha=ALPHA_PRIOR_SHAPE / ALPHA_PRIOR_RATE,
        k0=K0_PRIOR_SHAPE / K0_PRIOR_RATE,
        m1=m2.copy(),
        psi1=psi1,
        m2=m2,
        s2=s2,
        psi2=s2.copy(),
        nu=nu,
    )


def step4_sweep(
    state: OutcomeDpmState,
    rows: ArrayLike,
    rng: np.random.Generator,
    acceptance: AcceptanceCounter | None = None,
) -> OutcomeDpmState:
    """One blocked-Gibbs sweep on the arm's completed rows; psi1 is tallied as ``step4``."""
    state = state.copy()
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n_comp = state.truncation

    log_w = np.log(state.weights)
    logits = np.column_stack(
        [
            log_w[comp] + MultivariateNormal(state.means[comp], state.covs[comp]).logpdf(rows)
            for comp in range(n_comp)
        ]
    )
    state.labels = categorical_from_logits(rng, logits)
    counts = cluster_counts(state.labels, n_comp)
    state.fractions = sample_stick_fractions(rng, counts, state.alpha)
    state.weights = stick_weights(state.fractions)

    for comp in range(n_comp):
        members = rows[state.labels == comp]
        state.covs[comp], state.means[comp] = _sample_niw(state, members, rng)

    state.alpha = sample_concentration(rng, state.fractions, ALPHA_PRIOR_SHAPE, ALPHA_PRIOR_RATE)
    accepted = update_base_measure(state, rng)
    if acceptance is not None:
        acceptance.record("step4", accepted)
    return state


def _sample_niw(
    state: OutcomeDpmState, members: NDArray, rng: np.random.Generator
) -> tuple[NDArray, NDArray]:
    count = members.shape[0]
    k_n = state.k0 + count
    if count:
        center = members.mean(axis=0)
        resid = members - center
        offset = center - state.m1
        m_n = (state.k0 * state.m1 + count * center) / k_n
        psi_n = state.psi1 + resid.T @ resid + (state.k0 * count / k_n) * np.outer(offset, offset)
    else:
        m_n, psi_n = state.m1, state.psi1
    psi_n = 0.5 * (psi_n + psi_n.T)
    cov = inverse_wishart(state.nu + count, psi_n, rng)
    mean = MultivariateNormal(m_n, cov / k_n).sample(rng, 1)[0]
    return cov, mean


def _component_precisions(covs: NDArray) -> NDArray:
    precisions = np.stack([linalg.inv(cov) for cov in covs])
    return 0.5 * (precisions + np.transpose(precisions, (0, 2, 1)))


def sample_base_mean(
    state: OutcomeDpmState, precisions: NDArray, rng: np.random.Generator
) -> NDArray:
    """m1 | means, covs, k0 under m1 ~ N(m2, s2)."""
    s2_inv = linalg.inv(state.s2)
    post_prec = s2_inv + state.k0 * precisions.sum(axis=0)
    post_cov = linalg.inv(0.5 * (post_prec + post_prec.T))
    weighted = s2_inv @ state.m2 + state.k0 * np.einsum("lij,lj->i", precisions, state.means)
    post_cov = 0.5 * (post_cov + post_cov.T)
    return MultivariateNormal(post_cov @ weighted, post_cov).sample(rng, 1)[0]


def sample_k0(state: OutcomeDpmState, precisions: NDArray, rng: np.random.Generator) -> float:
    """k0 | means, covs, m1; conjugate Gamma."""
    n_comp, dim = state.means.shape
    diff = state.means - state.m1
    quad = np.einsum("li,lij,lj->l", diff, precisions, diff)
    shape = K0_PRIOR_SHAPE + 0.5 * n_comp * dim
    rate = K0_PRIOR_RATE + 0.5 * quad.sum()
    return float(rng.gamma(shape, 1.0 / rate))


def sample_psi1(
    state: OutcomeDpmState, precisions: NDArray, rng: np.random.Generator
) -> tuple[NDArray, bool]:
    """Independence Metropolis step for psi1 under its IW(df, psi2) prior.

    The proposal is Wishart in psi1 and carries the determinant and trace terms
    of the target, so only the prior's exp(-tr(psi2 psi1^-1) / 2) factor enters
    the acceptance ratio.
    """
    n_comp, dim = state.means.shape
    prior_df = psi1_prior_df(dim)
    total = n_comp * state.nu
    proposal_df = max(total - prior_df, float(dim))
    proposal_scale = linalg.inv(precisions.sum(axis=0))
    proposal = wishart(proposal_df, 0.5 * (proposal_scale + proposal_scale.T), rng)

    def log_weight(psi1: NDArray) -> float:
        logdet = np.linalg.slogdet(psi1)[1]
        power = 0.5 * (total - proposal_df + dim + 1.0)
        return power * logdet + inverse_wishart_logpdf(psi1, prior_df, state.psi2)

    if accept(rng, log_weight(proposal) - log_weight(state.psi1)):
        return proposal, True
    return state.psi1, False


def update_base_measure(state: OutcomeDpmState, rng: np.random.Generator) -> bool:
    """Resample m1, k0 and psi1 in turn; returns whether the psi1 proposal was kept."""
    precisions = _component_precisions(state.covs)
    state.m1 = sample_base_mean(state, precisions, rng)
    state.k0 = sample_k0(state, precisions, rng)
    state.psi1, accepted = sample_psi1(state, precisions, rng)
    return accepted


def check_outcome_truncation(weight_means: NDArray, arm: int) -> bool:
    last = float(weight_means[-1])
    if last > LAST_WEIGHT_WARNING:
        logger.warning(
            "Outcome mixture for arm %d keeps weight %.4f in its last component; "
            "consider a larger truncation",
            arm,
            last,
        )
        return False
    return True


@dataclass(frozen=True, slots=True, eq=False)
class ConditionalOutcome:
    """Gaussian mixture for Y at fixed inputs; batch dimensions lead, components trail."""

    weights: NDArray
    means: NDArray
    variances: NDArray

    def logpdf(self, y: ArrayLike) -> NDArray:
        y = np.asarray(y, dtype=float)[..., None]
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        comp = -0.5 * (_LOG_2PI + np.log(self.variances) + (y - self.means) ** 2 / self.variances)
        return logsumexp(log_w + comp, axis=-1)

    def density(self, y: ArrayLike) -> NDArray:
        return np.exp(self.logpdf(y))

    def mean(self) -> NDArray:
        return np.sum(self.weights * self.means, axis=-1)

    def sample(self, rng: np.random.Generator) -> NDArray:
        cumulative = np.cumsum(self.weights, axis=-1)
        u = rng.uniform(size=cumulative.shape[:-1] + (1,)) * cumulative[..., -1:]
        pick = np.minimum((cumulative < u).sum(axis=-1), self.weights.shape[-1] - 1)
        means = np.take_along_axis(self.means, pick[..., None], axis=-1)[..., 0]
        variances = np.broadcast_to(self.variances, self.means.shape)
        sd = np.sqrt(np.take_along_axis(variances, pick[..., None], axis=-1)[..., 0])
        return means + sd * rng.standard_normal(means.shape)


class OutcomeRegression:
    """Locally weighted normal regression of Y on (T, X) induced by one arm's mixture."""

    def __init__(self, params: OutcomeParams) -> None:
        keep = params.weights >= COMPONENT_WEIGHT_FLOOR
        if not np.any(keep):
            raise InvalidParameterError("outcome mixture has no component with positive weight")
        weights = params.weights[keep]
        means = params.means[keep]
        covs = params.covs[keep]
        self.log_weights = np.log(weights / weights.sum())
        self.input_means = means[:, 1:]
        rest = np.arange(1, params.dim)
        self.slopes = np.empty((weights.size, params.dim - 1))
        self.intercepts = np.empty(weights.size)
        self.variances = np.empty(weights.size)
        self.input_chol = np.empty((weights.size, params.dim - 1, params.dim - 1))
        self.input_log_det = np.empty(weights.size)
        for comp, (mean, cov) in enumerate(zip(means, covs, strict=True)):
            chol = cholesky_or_raise(cov[np.ix_(rest, rest)], "outcome input covariance")
            slope = linalg.cho_solve((chol, True), cov[rest, 0])
            self.slopes[comp] = slope
            self.intercepts[comp] = mean[0] - slope @ mean[1:]
            self.variances[comp] = cov[0, 0] - slope @ cov[rest, 0]
            self.input_chol[comp] = chol
            self.input_log_det[comp] = 2.0 * np.sum(np.log(np.diag(chol)))
        if np.any(self.variances <= 0):
            raise InvalidParameterError("outcome mixture has a non-positive conditional variance")

    @property
    def n_components(self) -> int:
        return self.intercepts.size

    @property
    def n_inputs(self) -> int:
        return self.slopes.shape[1]

    def _check(self, inputs: ArrayLike) -> NDArray:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.shape[-1] != self.n_inputs:
            raise InvalidParameterError(
                f"expected {self.n_inputs} regression inputs, got {inputs.shape[-1]}"
            )
        return inputs

    def local_log_weights(self, inputs: ArrayLike) -> NDArray:
        inputs = self._check(inputs)
        flat = inputs.reshape(-1, self.n_inputs)
        dim = self.n_inputs
        logs = np.empty((flat.shape[0], self.n_components))
        for comp in range(self.n_components):
            solved = linalg.solve_triangular(
                self.input_chol[comp], (flat - self.input_means[comp]).T, lower=True
            )
            quad = np.sum(solved * solved, axis=0)
            logs[:, comp] = self.log_weights[comp] - 0.5 * (
                dim * _LOG_2PI + self.input_log_det[comp] + quad
            )
        logs -= logsumexp(logs, axis=1, keepdims=True)
        return logs.reshape(inputs.shape[:-1] + (self.n_components,))

    def local_weights(self, inputs: ArrayLike) -> NDArray:
        return np.exp(self.local_log_weights(inputs))

    def component_means(self, inputs: ArrayLike) -> NDArray:
        return self._check(inputs) @ self.slopes.T + self.intercepts

    def conditional(self, inputs: ArrayLike) -> ConditionalOutcome:
        return ConditionalOutcome(
            weights=self.local_weights(inputs),
            means=self.component_means(inputs),
            variances=self.variances,
        )

    def mean(self, inputs: ArrayLike) -> NDArray:
        return self.conditional(inputs).mean()

    def logpdf(self, y: ArrayLike, inputs: ArrayLike) -> NDArray:
        return self.conditional(inputs).logpdf(y)

    def sample(self, inputs: ArrayLike, rng: np.random.Generator) -> NDArray:
        return self.conditional(inputs).sample(rng)


def regression_inputs(mediators: ArrayLike, x: ArrayLike) -> NDArray:
    """Concatenate 2K mediator values with covariates, broadcasting leading dims."""
    mediators = np.asarray(mediators, dtype=float)
    x = np.asarray(x, dtype=float)
    x = np.broadcast_to(x, mediators.shape[:-1] + x.shape[-1:])
    return np.concatenate([mediators, x], axis=-1)


def conditional_outcome_density(
    params: OutcomeParams | OutcomeRegression, m_full: ArrayLike, x: ArrayLike
) -> ConditionalOutcome:
    """Conditional law of Y given the full 2K mediator vector and covariates."""
    regression = params if isinstance(params, OutcomeRegression) else OutcomeRegression(params)
    return regression.conditional(regression_inputs(m_full, x))
