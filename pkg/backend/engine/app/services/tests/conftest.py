"""Shared builders for hand-specified posterior draws and small datasets."""

import numpy as np
import pytest

from services.model import (
    CorrelationMatrix,
    Dataset,
    MarginalParams,
    OutcomeParams,
    PosteriorDraw,
)


def normal_marginal(mean, sd=1.0, n_covariates=1, lower=-np.inf):
    """Single-component marginal with no covariate effect."""
    return MarginalParams(
        intercepts=[mean],
        precisions=[1.0 / sd**2],
        weights=[1.0],
        beta=np.zeros(n_covariates),
        x_center=np.zeros(n_covariates),
        mass=1.0,
        mu=mean,
        s=1.0,
        a_star=1.0,
        lower=lower,
    )


def linear_outcome(intercept, slopes, noise_var=0.25):
    """One-cluster joint Gaussian whose regression of Y on the inputs is exactly linear.

    Inputs are standard normal with identity covariance, so the regression
    slopes equal ``slopes`` and the residual variance is ``noise_var``.
    """
    slopes = np.asarray(slopes, dtype=float)
    dim = slopes.size + 1
    cov = np.eye(dim)
    cov[0, 0] = slopes @ slopes + noise_var
    cov[0, 1:] = cov[1:, 0] = slopes
    return OutcomeParams(
        weights=[1.0],
        means=[np.concatenate([[intercept], np.zeros(slopes.size)])],
        covs=[cov],
        alpha=1.0,
        k0=1.0,
        m1=np.zeros(dim),
        psi1=np.eye(dim),
    )


def make_draw(
    means,
    outcomes,
    correlation=None,
    mediators=None,
    n_covariates=1,
    iteration=1,
):
    """Posterior draw with arm-major marginal ``means`` and the given outcome models."""
    means = np.asarray(means, dtype=float)
    dim = means.size
    return PosteriorDraw(
        iteration=iteration,
        rng_position=(0, 0, 0, 0),
        marginals=tuple(normal_marginal(m, n_covariates=n_covariates) for m in means),
        correlation=correlation if correlation is not None else CorrelationMatrix(np.eye(dim)),
        outcomes=tuple(outcomes),
        mediators=mediators if mediators is not None else np.zeros((1, dim)),
    )


@pytest.fixture
def two_mediator_draw():
    """K=2, P=1: M(0) means (0, 1), M(1) means (1, 3); treated slopes 2 and 0.5 on M(1)."""
    # inputs are [M(0) slot (2), M(1) slot (2), x]
    treated = linear_outcome(1.0, [0.0, 0.0, 2.0, 0.5, 0.5])
    control = linear_outcome(0.0, [0.0, 0.0, 0.0, 0.0, 0.5])
    return make_draw([0.0, 1.0, 1.0, 3.0], (control, treated))


@pytest.fixture
def covariate_dataset():
    rng = np.random.default_rng(5)
    n = 200
    return Dataset(
        z=np.arange(n) % 2,
        m=rng.normal(size=(n, 2)),
        y=rng.normal(size=n),
        x=rng.normal(size=(n, 1)),
    )
