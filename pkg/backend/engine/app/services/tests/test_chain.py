"""Tests for the chain driver on a small two-mediator dataset."""

import numpy as np
import pytest

from services.errors import EngineError
from services.mcmc import BLOCKS, coordinate_labels, run_chain
from services.model import ChainConfig, Dataset, PriorMode


@pytest.fixture
def dataset():
    rng = np.random.default_rng(30)
    n = 60
    z = np.arange(n) % 2
    x = rng.normal(size=(n, 1))
    m = np.column_stack(
        [
            4.0 + z + 0.5 * x[:, 0] + rng.normal(scale=0.5, size=n),
            6.0 - z + rng.normal(scale=0.5, size=n),
        ]
    )
    y = 1.0 + 0.5 * z + 0.3 * m[:, 0] - 0.2 * m[:, 1] + rng.normal(scale=0.3, size=n)
    return Dataset(z=z, m=m, y=y, x=x, covariate_names=("age",))


@pytest.fixture
def config():
    return ChainConfig(n_iter=30, n_burn=10, thin=5, k_max=3, outcome_truncation=5, seed=7)


def test_chain_keeps_thinned_draws(dataset, config):
    """Test retained iterations and the observed half of every draw."""
    result = run_chain(dataset, config)
    assert result.n_draws == 4
    assert [d.iteration for d in result.draws] == [15, 20, 25, 30]
    mask = dataset.observed_mask()
    observed = np.hstack([dataset.m, dataset.m])[mask]
    for draw in result.draws:
        np.testing.assert_array_equal(draw.mediators[mask], observed)
        assert np.all(draw.mediators >= dataset.lower_bound)
        assert len(draw.marginals) == 4


def test_chain_trace_and_acceptance(dataset, config):
    """Test the global-parameter trace columns and per-block acceptance table."""
    result = run_chain(dataset, config)
    assert result.labels == ["m1(0)", "m2(0)", "m1(1)", "m2(1)"]
    for column in ("iteration", "beta[m1(0),age]", "mass[m2(1)]", "r0[1,2]", "r1[1,2]", "rho"):
        assert column in result.trace.columns
    assert {"alpha[0]", "alpha[1]"} <= set(result.trace.columns)
    assert len(result.trace) == 4
    table = result.acceptance_table()
    assert list(table["block"]) == list(BLOCKS)
    assert np.all(table["proposed"] > 0)


def test_constrained_prior_keeps_rho_in_unit_interval(dataset, config):
    """Test that every retained draw satisfies the constrained structure."""
    result = run_chain(dataset, config)
    for draw in result.draws:
        r = draw.correlation
        assert r.prior_mode is PriorMode.RHO_CONSTRAINED
        assert 0.0 <= r.rho <= 1.0
        np.testing.assert_allclose(np.diag(r.cross()), r.rho)


def test_uniform_prior_has_no_rho_column(dataset, config):
    """Test the uniform prior mode's trace."""
    result = run_chain(dataset, config.model_copy(update={"prior_mode": PriorMode.UNIFORM}))
    assert "rho" not in result.trace.columns
    assert "r0[1,2]" in result.trace.columns


def test_chain_is_reproducible(dataset, config):
    """Test that the same seed replays the same draws."""
    first = run_chain(dataset, config)
    second = run_chain(dataset, config)
    for a, b in zip(first.draws, second.draws, strict=True):
        np.testing.assert_array_equal(a.mediators, b.mediators)
        np.testing.assert_array_equal(a.correlation.values, b.correlation.values)
        assert a.rng_position == b.rng_position


def test_chain_errors_carry_iteration(dataset, config):
    """Test that a degenerate outcome arm fails with an engine error."""
    tiny = Dataset(
        z=dataset.z[:6],
        m=dataset.m[:6],
        y=dataset.y[:6],
        x=dataset.x[:6],
    )
    with pytest.raises(EngineError):
        run_chain(tiny, config)


def test_coordinate_labels_follow_names(dataset):
    """Test arm-major coordinate labels."""
    single = dataset.select_mediators([1])
    assert coordinate_labels(single) == ["m2(0)", "m2(1)"]
