"""Tests for the truncated-normal DP mixture marginals."""

import numpy as np
import pytest
from scipy import stats

from services.distributions import RngStream
from services.errors import InvalidParameterError
from services.mcmc import (
    MarginalHypers,
    MarginalMixture,
    fit_marginal,
    init_marginal_state,
    latent_column,
    log_prior,
    marginal_logpost,
    marginal_mixture,
    step1_sweep,
)
from services.mcmc.marginal import check_truncation
from services.model import ChainConfig, CorrelationMatrix, HyperpriorVariant
from services.tests.conftest import normal_marginal


@pytest.fixture
def mixture():
    return MarginalMixture(
        weights=np.array([0.3, 0.7]),
        means=np.array([1.0, 4.0]),
        sd=np.array([0.5, 1.5]),
        lower=0.0,
    )


@pytest.fixture
def regression_sample():
    rng = np.random.default_rng(21)
    x = rng.normal(size=(300, 1))
    t = 5.0 + 1.5 * x[:, 0] + 0.5 * rng.normal(size=300)
    return t, x


def test_hypers_are_scaled_by_observed_variance():
    """Test the data-scaled base-measure calibration."""
    values = np.array([1.0, 2.0, 3.0, 4.0])
    var = values.var(ddof=1)
    hypers = MarginalHypers.from_observed(values, 0.0)
    assert hypers.mu_star == pytest.approx(2.5)
    assert hypers.s_star == pytest.approx(2.0 / var)
    assert hypers.tau_rate == pytest.approx(var / 2.0)
    assert hypers.b_star(2.0) == pytest.approx(var)


def test_fixed_hyperprior_variant():
    """Test the fixed b* = 100 a* alternative."""
    config = ChainConfig(hyperprior_variant=HyperpriorVariant.FIXED_100)
    hypers = MarginalHypers.from_observed([1.0, 5.0], 0.0, config)
    assert hypers.b_star(3.0) == pytest.approx(300.0)


def test_mixture_density_matches_scipy(mixture):
    """Test the weighted truncated-normal density."""
    t = np.linspace(0.0, 8.0, 17)
    expected = sum(
        w * stats.truncnorm.pdf(t, a=(0.0 - m) / s, b=np.inf, loc=m, scale=s)
        for w, m, s in zip([0.3, 0.7], [1.0, 4.0], [0.5, 1.5], strict=True)
    )
    np.testing.assert_allclose(mixture.pdf(t), expected, rtol=1e-10)
    np.testing.assert_allclose(mixture.logpdf(t), np.log(expected), rtol=1e-10)


def test_mixture_quantile_inverts_cdf(mixture):
    """Test the safeguarded Newton inverse across the unit interval."""
    u = np.array([1e-6, 0.1, 0.3, 0.5, 0.9, 1 - 1e-6])
    np.testing.assert_allclose(mixture.cdf(mixture.quantile(u)), u, rtol=1e-8)


def test_mixture_quantile_rejects_endpoints(mixture):
    """Test that u outside (0, 1) is rejected."""
    with pytest.raises(InvalidParameterError, match="quantile argument"):
        mixture.quantile([0.0])


def test_covariates_shift_component_means():
    """Test means intercept + (x - x_center) @ beta and the covariate-count check."""
    params = normal_marginal(2.0, n_covariates=2)
    shifted = type(params)(
        intercepts=params.intercepts,
        precisions=params.precisions,
        weights=params.weights,
        beta=[1.0, -2.0],
        x_center=[0.5, 0.0],
        mass=1.0,
        mu=0.0,
        s=1.0,
        a_star=1.0,
        lower=-np.inf,
    )
    mixture = marginal_mixture(shifted, np.array([[1.5, 1.0], [0.5, 0.0]]))
    np.testing.assert_allclose(mixture.means[:, 0], [2.0 + 1.0 - 2.0, 2.0])
    with pytest.raises(InvalidParameterError, match="expected 2 covariates"):
        marginal_mixture(shifted, np.zeros(3))


def test_latent_column_is_standard_normal_for_correct_margin():
    """Test that scores of draws from the margin itself are standard normal."""
    rng = np.random.default_rng(8)
    values = rng.normal(3.0, 1.0, size=2000)
    h = latent_column(normal_marginal(3.0), values, np.zeros((2000, 1)))
    assert stats.kstest(h, "norm").pvalue > 0.001


def test_log_prior_support():
    """Test that the prior vanishes outside a* in [1, 5] and for non-positive precisions."""
    hypers = MarginalHypers.from_observed([1.0, 2.0, 4.0], 0.0)
    args = (np.array([1.0]), np.array([1.0]), np.zeros(1), 2.0, 1.0)
    assert np.isfinite(log_prior(*args, 2.0, hypers))
    assert log_prior(*args, 6.0, hypers) == -np.inf
    assert log_prior(args[0], np.array([0.0]), *args[2:], 2.0, hypers) == -np.inf


def test_init_state_spreads_clusters(regression_sample):
    """Test initial slopes from OLS and clusters over residual quantiles."""
    t, x = regression_sample
    hypers = MarginalHypers.from_observed(t, 0.0)
    state = init_marginal_state(t, x, np.arange(t.size), hypers, k_max=6)
    assert state.intercepts.size == 6
    assert np.all(np.diff(state.intercepts) > 0)
    assert state.weights.sum() == pytest.approx(1.0)
    assert state.beta[0] == pytest.approx(1.5, abs=0.1)
    assert state.labels.shape == (300,)


def test_step1_sweep_records_every_block(regression_sample):
    """Test that one sweep touches 1.b to 1.e and keeps a finite log posterior."""
    t, x = regression_sample
    hypers = MarginalHypers.from_observed(t, 0.0)
    state = init_marginal_state(t, x, np.arange(t.size), hypers, k_max=4)
    rng = RngStream(9).generator
    r = CorrelationMatrix.identity(1)
    h_other = np.zeros((t.size, 1))
    new = step1_sweep(state, t, x, h_other, r, 0, rng)
    assert new is not state
    for block, proposed in (("1b", 1), ("1c", 4), ("1d", 1), ("1e", 4)):
        assert new.acceptance.counts[block][1] == proposed
    assert np.isfinite(marginal_logpost(new.params(), t, h_other, x, r, 0, hypers))


def test_h_others_must_exclude_own_column(regression_sample):
    """Test the shape check on the other coordinates' scores."""
    t, x = regression_sample
    hypers = MarginalHypers.from_observed(t, 0.0)
    state = init_marginal_state(t, x, np.arange(t.size), hypers, k_max=2)
    with pytest.raises(InvalidParameterError, match="h_others"):
        marginal_logpost(
            state.params(), t, np.zeros((t.size, 2)), x, CorrelationMatrix.identity(1), 0, hypers
        )


def test_fit_marginal_recovers_slope(regression_sample):
    """Test the posterior slope and retained-draw count on a linear sample."""
    t, x = regression_sample
    config = ChainConfig(n_iter=300, n_burn=150, thin=5, k_max=4)
    draws = fit_marginal(t, x, 0.0, config, RngStream(10).generator)
    assert len(draws) == 30
    assert np.mean([d.beta[0] for d in draws]) == pytest.approx(1.5, abs=0.15)
    median = np.median(t)
    at_median = np.full(300, median)
    cdf_at_median = np.mean([marginal_mixture(d, x).cdf(at_median).mean() for d in draws])
    assert cdf_at_median == pytest.approx(0.5, abs=0.08)


def test_truncation_warning(caplog):
    """Test the warning when the smallest weight stays large."""
    assert check_truncation(np.array([0.5, 0.3, 0.2]), "m1(0)") is False
    assert "consider a larger k_max" in caplog.text
    assert check_truncation(np.array([0.9, 0.099, 0.001]), "m1(0)") is True
