"""Tests for the Gaussian copula likelihood and correlation updates."""

import numpy as np
import pytest
from scipy import stats

from services.distributions import RngStream
from services.errors import IncompatibleCorrelationError, MalformedCorrelationError
from services.mcmc import (
    AcceptanceCounter,
    build_constrained_R,
    copula_loglik,
    draw_potential_mediators,
    init_correlation,
    pd_interval,
    step2_sample_R,
)
from services.model import CorrelationMatrix, PriorMode
from services.tests.conftest import linear_outcome, make_draw


def random_correlation(rng, dim):
    a = rng.normal(size=(dim, 2 * dim))
    cov = a @ a.T
    scale = 1.0 / np.sqrt(np.diag(cov))
    values = cov * np.outer(scale, scale)
    values = 0.5 * (values + values.T)
    np.fill_diagonal(values, 1.0)
    return values


def min_eigenvalue_at(values, entry, value):
    trial = values.copy()
    j, k = entry
    trial[j, k] = trial[k, j] = value
    return np.linalg.eigvalsh(trial).min()


def test_pd_interval_matches_eigenvalue_boundary():
    """Test the interval endpoints against the smallest eigenvalue on random 6x6 matrices."""
    rng = np.random.default_rng(0)
    for _ in range(100):
        values = random_correlation(rng, 6)
        j, k = sorted(rng.choice(6, size=2, replace=False))
        interval = pd_interval(values, (j, k))
        assert values[j, k] in interval
        assert min_eigenvalue_at(values, (j, k), interval.lo + 1e-6) > 0
        assert min_eigenvalue_at(values, (j, k), interval.hi - 1e-6) > 0
        if interval.lo > -1.0:
            assert min_eigenvalue_at(values, (j, k), interval.lo - 1e-6) <= 0
        if interval.hi < 1.0:
            assert min_eigenvalue_at(values, (j, k), interval.hi + 1e-6) <= 0


def test_pd_interval_rejects_diagonal():
    """Test that diagonal entries have no free interval."""
    with pytest.raises(MalformedCorrelationError, match="diagonal"):
        pd_interval(np.eye(3), (1, 1))


def test_pd_interval_of_identity_is_full_range():
    """Test that a free entry of the identity ranges over (-1, 1)."""
    interval = pd_interval(np.eye(4), (0, 3))
    assert interval.lo == pytest.approx(-1.0)
    assert interval.hi == pytest.approx(1.0)
    assert interval.truncated_below(0.0).lo == 0.0


def test_copula_loglik_is_mvn_minus_independent_normals():
    """Test the copula log-likelihood against scipy densities."""
    rng = np.random.default_rng(1)
    values = random_correlation(rng, 4)
    r = CorrelationMatrix(values)
    h = rng.multivariate_normal(np.zeros(4), values, size=30)
    expected = stats.multivariate_normal(np.zeros(4), values).logpdf(h).sum()
    expected -= stats.norm.logpdf(h).sum()
    assert copula_loglik(h, r) == pytest.approx(expected, rel=1e-10)


def test_copula_loglik_is_zero_under_identity():
    """Test that independent latent scores contribute nothing."""
    h = np.random.default_rng(2).normal(size=(10, 2))
    assert copula_loglik(h, CorrelationMatrix.identity(1)) == pytest.approx(0.0, abs=1e-12)


def test_constrained_cross_block():
    """Test cross entries rho * (r(0) + r(1)) / 2 with cross diagonal rho."""
    block0 = np.array([[1.0, 0.4], [0.4, 1.0]])
    block1 = np.array([[1.0, 0.2], [0.2, 1.0]])
    r = build_constrained_R((block0, block1), 0.5)
    np.testing.assert_allclose(np.diag(r.cross()), [0.5, 0.5])
    assert r.cross()[0, 1] == pytest.approx(0.5 * 0.3)
    assert r.rho == 0.5
    assert r.prior_mode is PriorMode.RHO_CONSTRAINED


def test_constrained_rejects_incompatible_blocks():
    """Test that a non-PD assembly raises with the offending rho."""
    block0 = np.array([[1.0, 0.9], [0.9, 1.0]])
    block1 = np.array([[1.0, -0.9], [-0.9, 1.0]])
    with pytest.raises(IncompatibleCorrelationError, match="rho=0.9000"):
        build_constrained_R((block0, block1), 0.9)


def test_init_correlation_by_mode():
    """Test the starting matrices of both prior modes."""
    np.testing.assert_array_equal(init_correlation(PriorMode.UNIFORM, 2).values, np.eye(4))
    constrained = init_correlation(PriorMode.RHO_CONSTRAINED, 2)
    assert constrained.rho == 0.5
    np.testing.assert_allclose(np.diag(constrained.cross()), 0.5)


def test_uniform_sweeps_recover_correlation():
    """Test that repeated sweeps settle near the latent correlation."""
    rng = RngStream(3).generator
    h = rng.multivariate_normal([0.0, 0.0], [[1.0, 0.6], [0.6, 1.0]], size=2000)
    r = CorrelationMatrix.identity(1)
    acceptance = AcceptanceCounter()
    kept = []
    for sweep in range(400):
        r = step2_sample_R(r, h, rng, acceptance)
        if sweep >= 200:
            kept.append(r.values[0, 1])
    assert np.mean(kept) == pytest.approx(0.6, abs=0.05)
    accepted, proposed = acceptance.counts["step2"]
    assert proposed == 400
    assert 0 < accepted < proposed


def test_constrained_sweeps_stay_in_support():
    """Test non-negative within-arm entries, rho in [0, 1] and a PD matrix after every sweep."""
    rng = RngStream(4).generator
    r = init_correlation(PriorMode.RHO_CONSTRAINED, 2)
    target = build_constrained_R(
        (np.array([[1.0, 0.5], [0.5, 1.0]]), np.array([[1.0, 0.3], [0.3, 1.0]])), 0.7
    )
    h = rng.multivariate_normal(np.zeros(4), target.values, size=500)
    for _ in range(100):
        r = step2_sample_R(r, h, rng)
        assert r.within(0)[0, 1] >= 0.0
        assert r.within(1)[0, 1] >= 0.0
        assert 0.0 <= r.rho <= 1.0
        assert np.linalg.eigvalsh(r.values).min() > 0


def test_potential_draws_follow_marginals():
    """Test that copula draws of each coordinate follow its marginal law."""
    outcome = linear_outcome(0.0, np.zeros(5))
    values = np.eye(4)
    values[0, 2] = values[2, 0] = 0.8
    draw = make_draw([0.0, 1.0, 2.0, -1.0], (outcome, outcome), CorrelationMatrix(values))
    rng = RngStream(5).generator
    samples = draw_potential_mediators(draw, np.zeros((1, 1)), 4000, rng)[0]
    assert samples.shape == (4000, 4)
    for j, mean in enumerate([0.0, 1.0, 2.0, -1.0]):
        assert stats.kstest(samples[:, j], stats.norm(mean, 1.0).cdf).pvalue > 0.001
    assert np.corrcoef(samples[:, 0], samples[:, 2])[0, 1] == pytest.approx(0.8, abs=0.03)
