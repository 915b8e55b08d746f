"""Data augmentation for the cross-world mediator coordinates."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from ..distributions import CDF_CLAMP, latent_scores
from ..errors import InvalidParameterError
from ..model import (
    CorrelationMatrix,
    MarginalParams,
    PosteriorDraw,
    PotentialMediatorState,
    coordinate,
)
from .acceptance import AcceptanceCounter
from .marginal import marginal_mixture
from .outcome import OutcomeRegression, regression_inputs

logger = logging.getLogger(__name__)

ACCEPTANCE_BAND = (0.15, 0.6)


def initial_potential_state(
    m: ArrayLike,
    z: ArrayLike,
    rng: np.random.Generator,
) -> tuple[NDArray, NDArray]:
    """Observed half from the data; missing half resampled from the same margin's observations.

    Returns the ``(n, 2K)`` values and the observed mask.
    """
    m = np.asarray(m, dtype=float)
    z = np.asarray(z, dtype=int)
    n, k = m.shape
    treated = (z == 1)[:, None]
    mask = np.hstack([np.repeat(~treated, k, axis=1), np.repeat(treated, k, axis=1)])
    t = np.empty((n, 2 * k))
    for j in range(2 * k):
        arm, med = divmod(j, k)
        observed = z == arm
        t[observed, j] = m[observed, med]
        missing = ~observed
        if np.any(missing):
            t[missing, j] = rng.choice(m[observed, med], size=int(missing.sum()))
    return t, mask


def step3_impute(
    state: PotentialMediatorState,
    marginals: Sequence[MarginalParams],
    r: CorrelationMatrix,
    outcomes: Sequence[OutcomeRegression],
    y: ArrayLike,
    x: ArrayLike,
    z: ArrayLike,
    step_sd: ArrayLike,
    rng: np.random.Generator,
    acceptance: AcceptanceCounter | None = None,
) -> PotentialMediatorState:
    """Random-walk Metropolis update of every missing coordinate.

    Units are conditionally independent given the parameters, so each
    coordinate is updated for all units missing it in one vectorized step.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float).reshape(y.size, -1)
    z = np.asarray(z, dtype=int)
    step_sd = np.broadcast_to(np.asarray(step_sd, dtype=float), (r.dim,))
    if len(marginals) != r.dim or len(outcomes) != 2:
        raise InvalidParameterError(
            "need one marginal per coordinate and one outcome model per arm"
        )
    acceptance = acceptance if acceptance is not None else AcceptanceCounter()
    t = state.t.copy()
    h = state.h.copy()
    r_inv = r.inverse

    for j in range(r.dim):
        units = np.flatnonzero(~state.observed_mask[:, j])
        if units.size == 0:
            continue
        params = marginals[j]
        current = t[units, j]
        proposal = current + step_sd[j] * rng.standard_normal(units.size)
        log_u = np.log(rng.uniform(size=units.size))
        in_support = proposal >= params.lower

        mixture = marginal_mixture(params, x[units])
        h_prop = latent_scores(mixture.cdf(proposal))
        h_cur = h[units, j]
        others = np.delete(np.arange(r.dim), j)
        coupling = h[np.ix_(units, others)] @ r_inv[j, others]
        log_ratio = 0.5 * (1.0 - r_inv[j, j]) * (h_prop**2 - h_cur**2) - (h_prop - h_cur) * coupling
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio += mixture.logpdf(proposal) - mixture.logpdf(current)

        # units missing coordinate j all sit in the arm opposite to j's
        arm_model = outcomes[int(z[units[0]])]
        t_prop = t[units].copy()
        t_prop[:, j] = proposal
        log_ratio += arm_model.logpdf(y[units], regression_inputs(t_prop, x[units]))
        log_ratio -= arm_model.logpdf(y[units], regression_inputs(t[units], x[units]))

        accepted = in_support & np.isfinite(log_ratio) & (log_u < log_ratio)
        t[units[accepted], j] = proposal[accepted]
        h[units[accepted], j] = h_prop[accepted]
        acceptance.record("step3", int(accepted.sum()), units.size)

    return PotentialMediatorState(t, h, state.observed_mask)


def check_imputation_rate(acceptance: AcceptanceCounter) -> bool:
    rate = acceptance.rate("step3")
    low, high = ACCEPTANCE_BAND
    if np.isfinite(rate) and not low <= rate <= high:
        logger.warning(
            "Imputation acceptance rate %.3f is outside [%.2f, %.2f]; adjust imputation_step_scale",
            rate,
            low,
            high,
        )
        return False
    return True


def draw_potential_mediators(
    draw: PosteriorDraw,
    x_rows: ArrayLike,
    n_mc: int,
    rng: np.random.Generator,
) -> NDArray:
    """Copula draws of the full 2K vector at each covariate row: shape ``(m, n_mc, 2K)``."""
    if n_mc < 1:
        raise InvalidParameterError("n_mc must be at least 1")
    x_rows = np.atleast_2d(np.asarray(x_rows, dtype=float))
    n_rows = x_rows.shape[0]
    chol = np.linalg.cholesky(draw.correlation.values)
    scores = rng.standard_normal((n_rows, n_mc, draw.correlation.dim)) @ chol.T
    u = np.clip(ndtr(scores), CDF_CLAMP, 1.0 - CDF_CLAMP)
    out = np.empty_like(scores)
    for j, params in enumerate(draw.marginals):
        out[..., j] = marginal_mixture(params, x_rows).quantile(u[..., j])
    return out


def draw_counterfactual_mediators(
    draw: PosteriorDraw,
    x: ArrayLike,
    pattern: Sequence[int],
    n_mc: int,
    rng: np.random.Generator,
) -> NDArray:
    """Draws of (M_1(p_1), ..., M_K(p_K)) at covariates ``x``: shape ``(n_mc, K)``."""
    k = draw.n_mediators
    if len(pattern) != k or any(p not in (0, 1) for p in pattern):
        raise InvalidParameterError(f"pattern must hold {k} arm indices in {{0, 1}}")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    full = draw_potential_mediators(draw, x, n_mc, rng)[0]
    columns = [coordinate(arm, med, k) for med, arm in enumerate(pattern)]
    return full[:, columns]
