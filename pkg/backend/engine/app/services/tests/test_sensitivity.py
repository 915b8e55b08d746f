"""Tests for the exponential-tilt sensitivity analysis."""

import math

import numpy as np
import pandas as pd
import pytest
from scipy import integrate

from services.effects import posterior_effects
from services.errors import InvalidParameterError
from services.mcmc import ConditionalOutcome
from services.model import Dataset, SensitivityConfig
from services.sensitivity import (
    ChiBounds,
    Standardizer,
    chi_bounds,
    chi_label,
    d_statistics,
    difference_covariance,
    sensitivity_effects,
    switched_set,
    tilted_conditional_density,
)
from services.tests.conftest import make_draw

N_MC = 8
SEED = 17


@pytest.fixture
def dataset():
    rng = np.random.default_rng(50)
    n = 120
    return Dataset(
        z=np.arange(n) % 2,
        m=rng.normal(size=(n, 2)),
        y=rng.normal(2.0, 1.5, size=n),
        x=rng.normal(size=(n, 1)),
        lower_bound=-np.inf,
    )


@pytest.fixture
def draws(two_mediator_draw):
    rng = np.random.default_rng(51)
    return [
        make_draw(
            [0.0, 1.0, 1.0, 3.0],
            two_mediator_draw.outcomes,
            mediators=rng.normal(size=(120, 4)) + [0.0, 1.0, 1.0, 3.0],
            iteration=i + 1,
        )
        for i in range(3)
    ]


def untilted(draws, dataset):
    effects = posterior_effects(
        draws,
        dataset,
        n_mc=N_MC,
        seed=SEED,
        dissociative_multiplier=0.25,
        associative_multiplier=0.25,
    )
    return effects.mediation_draws


def test_tilt_matches_numerical_reweighting():
    """Test the tilted mixture against direct reweighting of the base density."""
    base = ConditionalOutcome(
        weights=np.array([0.4, 0.6]), means=np.array([0.0, 3.0]), variances=np.array([1.0, 0.5])
    )
    standardizer = Standardizer(center=1.0, scale=2.0)
    tilted = tilted_conditional_density(base, 1.8, standardizer)
    grid = np.linspace(-12.0, 15.0, 20001)
    weight = np.exp(np.log(1.8) * (grid - 1.0) / 2.0) * base.density(grid)
    expected = weight / integrate.trapezoid(weight, grid)
    np.testing.assert_allclose(tilted.density(grid), expected, atol=1e-6)
    assert tilted.weights.sum() == pytest.approx(1.0)


def test_tilt_shifts_single_gaussian_mean():
    """Test that one component moves by log(chi) / scale times its variance."""
    base = ConditionalOutcome(np.array([1.0]), np.array([2.0]), np.array([0.25]))
    tilted = tilted_conditional_density(base, math.e, Standardizer(0.0, 2.0))
    assert float(tilted.mean()) == pytest.approx(2.0 + 0.5 * 0.25)
    assert tilted_conditional_density(base, 1.0, Standardizer(0.0, 2.0)) is base
    with pytest.raises(InvalidParameterError, match="chi must be positive"):
        tilted_conditional_density(base, 0.0, Standardizer(0.0, 2.0))


def test_standardizer_uses_treated_outcomes(dataset):
    """Test the treated-arm centre, scale and default y*."""
    standardizer = Standardizer.from_dataset(dataset)
    treated = dataset.y[dataset.z == 1]
    assert standardizer.center == pytest.approx(treated.mean())
    assert standardizer.scale == pytest.approx(treated.std(ddof=1))
    assert standardizer.default_y_star() == pytest.approx(treated.mean() + treated.std(ddof=1))
    with pytest.raises(InvalidParameterError, match="scale must be positive"):
        Standardizer(0.0, 0.0)


def test_d_statistics_thresholds():
    """Test single and pairwise distances and their thresholds."""
    cov = np.array([[4.0, 1.0], [1.0, 1.0]])
    distances = d_statistics(np.array([[2.0, 0.0], [0.0, 0.5]]), cov, 1.5)
    np.testing.assert_allclose(distances[(0,)].distance, [1.0, 0.0])
    assert distances[(0,)].threshold == pytest.approx(1.5)
    r = 1.0 / 2.0
    assert distances[(0, 1)].threshold == pytest.approx(1.5 * math.sqrt(2.0 + 2.0 * r))
    np.testing.assert_array_equal(distances[(1,)].exceeds, [False, False])
    with pytest.raises(InvalidParameterError, match="epsilon must be positive"):
        d_statistics(np.zeros((1, 2)), cov, 0.0)


def test_difference_covariance_needs_two_draws():
    """Test the per-unit Monte Carlo count check."""
    with pytest.raises(InvalidParameterError, match="at least two"):
        difference_covariance(np.zeros((5, 1, 4)))


def test_switched_set_and_labels():
    """Test the switched mediators of a pattern relative to the outcome arm."""
    assert switched_set((1, 0, 1), 1) == (1,)
    assert switched_set((1, 0, 1), 0) == (0, 2)
    assert chi_label([1.0, 1.5]) == "1,1.5"


def test_chi_bounds_admits():
    """Test the admissible region for chi."""
    bounds = ChiBounds(upper=2.0, n_units=3)
    assert bounds.admits([1.0, 1.5])
    assert not bounds.admits([1.5, 1.5])
    assert not bounds.admits([0.9, 1.0])
    assert ChiBounds(math.inf, 0).unbounded


def test_unit_chi_reproduces_posterior_effects(draws, dataset):
    """Test that chi = 1 reproduces the untilted estimands bit for bit."""
    config = SensitivityConfig(epsilons=[0.5, 2.0], chi=[[1.0, 1.0]])
    result = sensitivity_effects(draws, dataset, config, n_mc=N_MC, seed=SEED)
    base = untilted(draws, dataset).set_index(["draw", "estimand"])["value"]
    for _, group in result.per_draw.groupby("epsilon"):
        values = group.set_index(["draw", "estimand"])["value"]
        pd.testing.assert_series_equal(values, base.loc[values.index], check_exact=True)
    assert (result.per_draw["n_tilted"] == 0).all()


def test_infinite_epsilon_tilts_nobody(draws, dataset):
    """Test that epsilon = inf leaves every estimand untilted for any chi."""
    config = SensitivityConfig(epsilons=[math.inf], chi=[[2.0, 3.0]])
    result = sensitivity_effects(draws, dataset, config, n_mc=N_MC, seed=SEED)
    base = untilted(draws, dataset).set_index(["draw", "estimand"])["value"]
    values = result.per_draw.set_index(["draw", "estimand"])["value"]
    np.testing.assert_array_equal(values.to_numpy(), base.loc[values.index].to_numpy())
    assert np.isinf(result.bounds["upper"]).all()


def test_tilting_first_mediator_lowers_its_indirect_effect(draws, dataset):
    """Test the direction of the tilt on NIE_1."""
    config = SensitivityConfig(epsilons=[1e-6], chi=[[1.0, 1.0], [2.0, 1.0]])
    summary = sensitivity_effects(draws, dataset, config, n_mc=N_MC, seed=SEED).summary
    nie = summary[summary["estimand"] == "NIE_1"].set_index("chi")["mean"]
    assert nie["2,1"] < nie["1,1"]
    assert set(summary.columns[:3]) == {"epsilon", "chi", "estimand"}


def test_chi_vector_length_is_checked(draws, dataset):
    """Test that chi must have one entry per mediator."""
    config = SensitivityConfig(chi=[[1.0, 1.0, 1.0]])
    with pytest.raises(InvalidParameterError, match="must have 2 entries"):
        sensitivity_effects(draws, dataset, config, n_mc=N_MC, seed=SEED)


def test_chi_bounds_ratio_at_y_star(draws, dataset):
    """Test the density-ratio bound on prod(chi) for one draw."""
    bounds = chi_bounds(draws[0], dataset, 3.0, 1e-6, N_MC, SEED)
    assert bounds.n_units == dataset.n
    assert bounds.upper > 0
