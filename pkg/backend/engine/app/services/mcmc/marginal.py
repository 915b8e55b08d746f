"""DP mixture of truncated normals for one potential-mediator coordinate.

Each coordinate ``j`` of the 2K vector has its own truncated stick-breaking
mixture with shared covariate slopes. A sweep runs the block Metropolis
updates in a fixed order:

    1.a  labels, stick fractions, DP mass (Gibbs)
    1.b  (a*, mu, S) jointly, prior-only ratio
    1.c  one intercept per cluster, random walk
    1.d  covariate slopes, adaptive random walk
    1.e  one precision per cluster, Gamma proposal on the variance scale

Every MH target other than 1.b includes the Gaussian-copula terms that
couple coordinate ``j`` to the other latent scores.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln, logsumexp

from ..distributions import (
    categorical_from_logits,
    cluster_counts,
    latent_scores,
    sample_concentration,
    sample_stick_fractions,
    stick_weights,
    truncnorm_cdf,
    truncnorm_logpdf,
    truncnorm_pdf,
    truncnorm_ppf,
)
from ..errors import InvalidParameterError, NotPositiveDefiniteError
from ..model import ChainConfig, CorrelationMatrix, HyperpriorVariant, MarginalParams
from .acceptance import AcceptanceCounter, accept

logger = logging.getLogger(__name__)

MASS_PRIOR_SHAPE = 1.0
MASS_PRIOR_RATE = 1.0
PRECISION_PRIOR_SHAPE = 1.0
A_STAR_LOW, A_STAR_HIGH = 1.0, 5.0
INTERCEPT_STEP = 0.1
S_STEP = 0.1
ADAPT_SCALE = 2.38**2
ADAPT_JITTER = 0.1**2
SMALLEST_WEIGHT_WARNING = 0.005
QUANTILE_TOL = 1e-13
QUANTILE_MAX_ITER = 200

_LOG_2PI = np.log(2.0 * np.pi)


def _normal_logpdf(x: ArrayLike, mean: float, precision: float) -> NDArray:
    x = np.asarray(x, dtype=float)
    return 0.5 * (np.log(precision) - _LOG_2PI) - 0.5 * precision * (x - mean) ** 2


def _gamma_logpdf(x: ArrayLike, shape: float, rate: float) -> NDArray:
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x
    return np.where(x > 0, out, -np.inf)


@dataclass(frozen=True, slots=True)
class MarginalHypers:
    """Fixed base-measure calibration for one coordinate."""

    mu_star: float
    s_star: float
    sample_var: float
    lower: float
    variant: HyperpriorVariant = HyperpriorVariant.DATA_SCALED
    beta_prior_sd: float = 10.0
    tau_concentration: float = 100.0

    @classmethod
    def from_observed(
        cls,
        values: ArrayLike,
        lower: float,
        config: ChainConfig | None = None,
    ) -> MarginalHypers:
        values = np.asarray(values, dtype=float)
        config = config or ChainConfig()
        mean = float(values.mean()) if values.size else 0.0
        var = float(values.var(ddof=1)) if values.size > 1 else 1.0
        if not var > 0:
            var = 1.0
        return cls(
            mu_star=mean,
            s_star=2.0 / var,
            sample_var=var,
            lower=lower,
            variant=config.hyperprior_variant,
            beta_prior_sd=config.beta_prior_sd,
            tau_concentration=config.tau_proposal_concentration,
        )

    def b_star(self, a_star: float) -> float:
        if self.variant is HyperpriorVariant.FIXED_100:
            return 100.0 * a_star
        return a_star * self.sample_var / 2.0

    @property
    def tau_rate(self) -> float:
        return self.sample_var / 2.0

    @property
    def mu_proposal_sd(self) -> float:
        return float(np.sqrt(self.sample_var / 2.0))


@dataclass(slots=True)
class AdaptiveCovariance:
    """Running mean/covariance of the slope chain (Welford updates)."""

    count: int
    mean: NDArray
    m2: NDArray

    @classmethod
    def start(cls, dim: int) -> AdaptiveCovariance:
        return cls(0, np.zeros(dim), np.zeros((dim, dim)))

    def update(self, value: NDArray) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + np.outer(delta, value - self.mean)

    def proposal_cov(self) -> NDArray:
        dim = self.mean.size
        if self.count < 2 * dim or self.count < 2:
            empirical = ADAPT_JITTER * np.eye(dim)
        else:
            empirical = self.m2 / (self.count - 1)
        return ADAPT_SCALE / (2 * dim) * empirical + ADAPT_JITTER / (2 * dim) * np.eye(dim)

    def copy(self) -> AdaptiveCovariance:
        return AdaptiveCovariance(self.count, self.mean.copy(), self.m2.copy())


@dataclass(frozen=True, slots=True, eq=False)
class MarginalMixture:
    """Mixture density of one coordinate at fixed covariates.

    ``means`` has shape ``batch + (L,)``; evaluation points may add trailing
    dimensions to the batch (e.g. ``(n, n_mc)`` points for ``n`` units).
    """

    weights: NDArray
    means: NDArray
    sd: NDArray
    lower: float

    def _broadcast(self, t: ArrayLike) -> tuple[NDArray, NDArray]:
        t = np.asarray(t, dtype=float)
        batch = self.means.ndim - 1
        extra = t.ndim - batch
        if extra < 0 or t.shape[:batch] != self.means.shape[:-1]:
            raise InvalidParameterError(
                f"evaluation shape {t.shape} does not extend covariate batch "
                f"{self.means.shape[:-1]}"
            )
        means = self.means.reshape(self.means.shape[:-1] + (1,) * extra + self.means.shape[-1:])
        return t[..., None], means

    def component_logpdf(self, t: ArrayLike) -> NDArray:
        t, means = self._broadcast(t)
        return truncnorm_logpdf(t, means, self.sd, self.lower)

    def logpdf(self, t: ArrayLike) -> NDArray:
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        return logsumexp(log_w + self.component_logpdf(t), axis=-1)

    def pdf(self, t: ArrayLike) -> NDArray:
        t, means = self._broadcast(t)
        return np.sum(self.weights * truncnorm_pdf(t, means, self.sd, self.lower), axis=-1)

    def cdf(self, t: ArrayLike) -> NDArray:
        t, means = self._broadcast(t)
        values = np.sum(self.weights * truncnorm_cdf(t, means, self.sd, self.lower), axis=-1)
        return np.clip(values, 0.0, 1.0)

    def quantile(self, u: ArrayLike) -> NDArray:
        """Inverse cdf by safeguarded Newton inside the component-quantile bracket."""
        u = np.asarray(u, dtype=float)
        if np.any(np.isnan(u)) or np.any((u <= 0.0) | (u >= 1.0)):
            raise InvalidParameterError("quantile argument must lie in (0, 1)")
        u_b, means = self._broadcast(u)
        active = self.weights > 0
        component_q = truncnorm_ppf(u_b, means[..., active], self.sd[active], self.lower)
        lo = component_q.min(axis=-1)
        hi = component_q.max(axis=-1)
        t = 0.5 * (lo + hi)
        for _ in range(QUANTILE_MAX_ITER):
            gap = self.cdf(t) - u
            lo = np.where(gap < 0, t, lo)
            hi = np.where(gap > 0, t, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = t - gap / self.pdf(t)
            inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
            step = np.where(inside, newton, 0.5 * (lo + hi))
            step = np.where(gap == 0, t, step)
            moved = np.abs(step - t)
            t = step
            if np.all(moved <= QUANTILE_TOL * (1.0 + np.abs(t))):
                break
        return np.maximum(t, self.lower)

    def take(self, index: ArrayLike) -> MarginalMixture:
        return MarginalMixture(self.weights, self.means[np.asarray(index)], self.sd, self.lower)


def _component_means(intercepts: NDArray, beta: NDArray, x_centered: NDArray) -> NDArray:
    return np.asarray(x_centered @ beta)[..., None] + intercepts


def marginal_mixture(params: MarginalParams, x: ArrayLike) -> MarginalMixture:
    """Mixture of truncated normals at covariates ``x`` (shape ``(P,)`` or ``(n, P)``)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != params.n_covariates:
        raise InvalidParameterError(
            f"expected {params.n_covariates} covariates, got shape {x.shape}"
        )
    x_centered = x - params.x_center
    means = _component_means(params.intercepts, params.beta, x_centered)
    return MarginalMixture(
        weights=params.weights,
        means=means,
        sd=1.0 / np.sqrt(params.precisions),
        lower=params.lower,
    )


def latent_column(params: MarginalParams, t_j: ArrayLike, x: ArrayLike) -> NDArray:
    """H_j = Phi^-1(F_j(T_j)) for every unit."""
    return latent_scores(marginal_mixture(params, x).cdf(t_j))


def log_prior(
    intercepts: NDArray,
    precisions: NDArray,
    beta: NDArray,
    mu: float,
    s: float,
    a_star: float,
    hypers: MarginalHypers,
) -> float:
    if not A_STAR_LOW <= a_star <= A_STAR_HIGH or s <= 0 or np.any(precisions <= 0):
        return -np.inf
    value = np.sum(_normal_logpdf(intercepts, mu, s))
    value += np.sum(_gamma_logpdf(precisions, PRECISION_PRIOR_SHAPE, hypers.tau_rate))
    value += _normal_logpdf(mu, hypers.mu_star, hypers.s_star)
    value += _gamma_logpdf(s, a_star, hypers.b_star(a_star))
    value += np.sum(_normal_logpdf(beta, 0.0, hypers.beta_prior_sd**-2))
    value -= np.log(A_STAR_HIGH - A_STAR_LOW)
    return float(value)


def _precision_row(r: CorrelationMatrix | NDArray, j: int) -> tuple[float, NDArray]:
    if isinstance(r, CorrelationMatrix):
        r_inv = r.inverse
    else:
        values = np.atleast_2d(np.asarray(r, dtype=float))
        try:
            r_inv = np.linalg.inv(np.linalg.cholesky(values))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "correlation matrix", float(np.linalg.eigvalsh(values)[0]), module="marginal-dpm"
            ) from exc
        r_inv = r_inv.T @ r_inv
    others = np.delete(r_inv[j], j)
    return float(r_inv[j, j]), others


@dataclass(slots=True)
class _MarginTarget:
    """Log posterior of one coordinate with the copula coupling precomputed."""

    t: NDArray
    x_centered: NDArray
    coupling: NDArray
    rinv_jj: float
    hypers: MarginalHypers

    def __call__(
        self,
        intercepts: NDArray,
        precisions: NDArray,
        weights: NDArray,
        beta: NDArray,
        mu: float,
        s: float,
        a_star: float,
    ) -> float:
        prior = log_prior(intercepts, precisions, beta, mu, s, a_star, self.hypers)
        if not np.isfinite(prior):
            return -np.inf
        if self.t.size == 0:
            return prior
        means = _component_means(intercepts, beta, self.x_centered)
        sd = 1.0 / np.sqrt(precisions)
        lower = self.hypers.lower
        with np.errstate(divide="ignore"):
            log_w = np.log(weights)
        loglik = logsumexp(log_w + truncnorm_logpdf(self.t[:, None], means, sd, lower), axis=1)
        cdf = np.sum(weights * truncnorm_cdf(self.t[:, None], means, sd, lower), axis=1)
        h = latent_scores(cdf)
        copula = 0.5 * (1.0 - self.rinv_jj) * (h @ h) - h @ self.coupling
        return float(copula + loglik.sum() + prior)


def marginal_logpost(
    params: MarginalParams,
    t_j: ArrayLike,
    h_others: ArrayLike,
    x: ArrayLike,
    r: CorrelationMatrix | NDArray,
    j: int,
    hypers: MarginalHypers,
) -> float:
    """Conditional log posterior of coordinate ``j`` given the other latent scores.

    ``h_others`` holds the latent scores of every coordinate except ``j``,
    in coordinate order.
    """
    target = _build_target(params.x_center, t_j, h_others, x, r, j, hypers)
    return target(
        params.intercepts,
        params.precisions,
        params.weights,
        params.beta,
        params.mu,
        params.s,
        params.a_star,
    )


def _as_rows(values: ArrayLike, n: int) -> NDArray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return values
    return values.reshape(n, -1) if n else np.zeros((0, 0))


def _build_target(
    x_center: NDArray,
    t_j: ArrayLike,
    h_others: ArrayLike,
    x: ArrayLike,
    r: CorrelationMatrix | NDArray,
    j: int,
    hypers: MarginalHypers,
) -> _MarginTarget:
    t_j = np.asarray(t_j, dtype=float).reshape(-1)
    x = _as_rows(x, t_j.size)
    h_others = _as_rows(h_others, t_j.size)
    rinv_jj, rinv_others = _precision_row(r, j)
    if h_others.shape[1] != rinv_others.size:
        raise InvalidParameterError("h_others must hold every coordinate except j")
    return _MarginTarget(
        t=t_j,
        x_centered=x - x_center,
        coupling=h_others @ rinv_others,
        rinv_jj=rinv_jj,
        hypers=hypers,
    )


@dataclass(slots=True)
class MarginalState:
    """Sampler state of one coordinate's mixture."""

    intercepts: NDArray
    precisions: NDArray
    fractions: NDArray
    weights: NDArray
    beta: NDArray
    x_center: NDArray
    mass: float
    mu: float
    s: float
    a_star: float
    labels: NDArray
    hypers: MarginalHypers
    adapt: AdaptiveCovariance
    acceptance: AcceptanceCounter = field(default_factory=AcceptanceCounter)

    def params(self) -> MarginalParams:
        return MarginalParams(
            intercepts=self.intercepts,
            precisions=self.precisions,
            weights=self.weights,
            beta=self.beta,
            x_center=self.x_center,
            mass=self.mass,
            mu=self.mu,
            s=self.s,
            a_star=self.a_star,
            lower=self.hypers.lower,
        )

    def copy(self) -> MarginalState:
        return replace(
            self,
            intercepts=self.intercepts.copy(),
            precisions=self.precisions.copy(),
            fractions=self.fractions.copy(),
            weights=self.weights.copy(),
            beta=self.beta.copy(),
            labels=self.labels.copy(),
            adapt=self.adapt.copy(),
            acceptance=self.acceptance.copy(),
        )


def init_marginal_state(
    t_j: ArrayLike,
    x: ArrayLike,
    observed: ArrayLike,
    hypers: MarginalHypers,
    k_max: int,
) -> MarginalState:
    """Spread ``k_max`` clusters over the residual quantiles of an OLS fit.

    ``observed`` indexes the units whose value of this coordinate is data
    rather than an initial imputation; slopes are fit on those only.
    """
    t_j = np.asarray(t_j, dtype=float).reshape(-1)
    x = _as_rows(x, t_j.size)
    observed = np.asarray(observed, dtype=int)
    n_cov = x.shape[1]
    x_center = x.mean(axis=0) if t_j.size else np.zeros(n_cov)
    x_centered = x - x_center

    beta = np.zeros(n_cov)
    if n_cov and observed.size > n_cov + 1:
        design = np.column_stack([np.ones(observed.size), x_centered[observed]])
        coef, *_ = np.linalg.lstsq(design, t_j[observed], rcond=None)
        beta = coef[1:]

    residual = t_j - x_centered @ beta if t_j.size else np.array([hypers.mu_star])
    levels = (np.arange(k_max) + 0.5) / k_max
    intercepts = np.quantile(residual, levels)
    spread = float(np.var(residual)) if residual.size > 1 else hypers.sample_var
    precisions = np.full(k_max, 4.0 / max(spread, 1e-8))
    fractions = np.append(1.0 / (k_max - np.arange(k_max - 1)), 1.0)
    labels = (
        np.abs(residual[:, None] - intercepts[None, :]).argmin(axis=1)
        if t_j.size
        else np.zeros(0, dtype=int)
    )
    return MarginalState(
        intercepts=intercepts,
        precisions=precisions,
        fractions=fractions,
        weights=stick_weights(fractions),
        beta=beta,
        x_center=x_center,
        mass=1.0,
        mu=hypers.mu_star,
        s=hypers.s_star,
        a_star=0.5 * (A_STAR_LOW + A_STAR_HIGH),
        labels=labels,
        hypers=hypers,
        adapt=AdaptiveCovariance.start(n_cov),
    )


def step1_sweep(
    state: MarginalState,
    t_j: ArrayLike,
    x: ArrayLike,
    h_others: ArrayLike,
    r: CorrelationMatrix | NDArray,
    j: int,
    rng: np.random.Generator,
) -> MarginalState:
    """One pass of sub-steps 1.a to 1.e; returns a new state."""
    state = state.copy()
    target = _build_target(state.x_center, t_j, h_others, x, r, j, state.hypers)

    _update_labels_and_sticks(state, target, rng)

    _update_base_measure(state, rng)
    current = _evaluate(state, target)
    current = _update_intercepts(state, target, current, rng)
    current = _update_slopes(state, target, current, rng)
    _update_precisions(state, target, current, rng)
    return state


def _evaluate(state: MarginalState, target: _MarginTarget, **overrides: object) -> float:
    values = {
        "intercepts": state.intercepts,
        "precisions": state.precisions,
        "weights": state.weights,
        "beta": state.beta,
        "mu": state.mu,
        "s": state.s,
        "a_star": state.a_star,
    }
    values.update(overrides)
    return target(**values)


def _update_labels_and_sticks(
    state: MarginalState, target: _MarginTarget, rng: np.random.Generator
) -> None:
    k_max = state.intercepts.size
    if target.t.size:
        means = _component_means(state.intercepts, state.beta, target.x_centered)
        sd = 1.0 / np.sqrt(state.precisions)
        with np.errstate(divide="ignore"):
            log_w = np.log(state.weights)
        logits = log_w + truncnorm_logpdf(target.t[:, None], means, sd, state.hypers.lower)
        state.labels = categorical_from_logits(rng, logits)
    counts = cluster_counts(state.labels, k_max)
    state.fractions = sample_stick_fractions(rng, counts, state.mass)
    state.weights = stick_weights(state.fractions)
    state.mass = sample_concentration(rng, state.fractions, MASS_PRIOR_SHAPE, MASS_PRIOR_RATE)


def _hyper_log_density(state: MarginalState, mu: float, s: float, a_star: float) -> float:
    if not A_STAR_LOW <= a_star <= A_STAR_HIGH or s <= 0:
        return -np.inf
    hypers = state.hypers
    value = np.sum(_normal_logpdf(state.intercepts, mu, s))
    value += _normal_logpdf(mu, hypers.mu_star, hypers.s_star)
    value += _gamma_logpdf(s, a_star, hypers.b_star(a_star))
    return float(value)


def _update_base_measure(state: MarginalState, rng: np.random.Generator) -> None:
    a_prop = rng.uniform(A_STAR_LOW, A_STAR_HIGH)
    mu_prop = state.mu + state.hypers.mu_proposal_sd * rng.standard_normal()
    s_prop = rng.uniform(state.s - S_STEP, state.s + S_STEP)
    log_ratio = _hyper_log_density(state, mu_prop, s_prop, a_prop) - _hyper_log_density(
        state, state.mu, state.s, state.a_star
    )
    accepted = accept(rng, log_ratio)
    if accepted:
        state.a_star, state.mu, state.s = a_prop, mu_prop, s_prop
    state.acceptance.record("1b", accepted)


def _update_intercepts(
    state: MarginalState, target: _MarginTarget, current: float, rng: np.random.Generator
) -> float:
    for c in range(state.intercepts.size):
        proposal = state.intercepts.copy()
        proposal[c] += INTERCEPT_STEP * rng.standard_normal()
        value = _evaluate(state, target, intercepts=proposal)
        accepted = accept(rng, value - current)
        if accepted:
            state.intercepts, current = proposal, value
        state.acceptance.record("1c", accepted)
    return current


def _update_slopes(
    state: MarginalState, target: _MarginTarget, current: float, rng: np.random.Generator
) -> float:
    if state.beta.size == 0:
        return current
    cov = state.adapt.proposal_cov()
    proposal = state.beta + np.linalg.cholesky(cov) @ rng.standard_normal(state.beta.size)
    value = _evaluate(state, target, beta=proposal)
    accepted = accept(rng, value - current)
    if accepted:
        state.beta, current = proposal, value
    state.acceptance.record("1d", accepted)
    state.adapt.update(state.beta)
    return current


def _update_precisions(
    state: MarginalState, target: _MarginTarget, current: float, rng: np.random.Generator
) -> float:
    concentration = state.hypers.tau_concentration
    for c in range(state.precisions.size):
        variance = 1.0 / state.precisions[c]
        variance_prop = rng.gamma(concentration * variance, 1.0 / concentration)
        if not variance_prop > 0:
            state.acceptance.record("1e", False)
            continue
        proposal = state.precisions.copy()
        proposal[c] = 1.0 / variance_prop
        value = _evaluate(state, target, precisions=proposal)
        log_ratio = (
            value
            - current
            + _gamma_logpdf(variance, concentration * variance_prop, concentration)
            - _gamma_logpdf(variance_prop, concentration * variance, concentration)
            + 2.0 * np.log(proposal[c] / state.precisions[c])
        )
        accepted = accept(rng, float(log_ratio))
        if accepted:
            state.precisions, current = proposal, value
        state.acceptance.record("1e", accepted)
    return current


def check_truncation(weight_means: NDArray, coordinate_label: str) -> bool:
    """Warn when even the smallest cluster keeps noticeable posterior weight."""
    smallest = float(np.min(weight_means))
    if smallest > SMALLEST_WEIGHT_WARNING:
        logger.warning(
            "Smallest mixture weight %.4f for %s exceeds %.3f; consider a larger k_max",
            smallest,
            coordinate_label,
            SMALLEST_WEIGHT_WARNING,
        )
        return False
    return True
