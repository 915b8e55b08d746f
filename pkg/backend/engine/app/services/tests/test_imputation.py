"""Tests for cross-world mediator imputation and counterfactual mediator draws."""

import numpy as np
import pytest

from services.distributions import RngStream
from services.errors import InvalidParameterError
from services.mcmc import (
    AcceptanceCounter,
    OutcomeRegression,
    draw_counterfactual_mediators,
    initial_potential_state,
    latent_column,
    step3_impute,
)
from services.mcmc.imputation import check_imputation_rate
from services.model import CorrelationMatrix, PotentialMediatorState
from services.tests.conftest import linear_outcome, normal_marginal


@pytest.fixture
def arm_data():
    rng = np.random.default_rng(14)
    n = 40
    z = np.arange(n) % 2
    m = rng.normal(5.0, 1.0, size=(n, 2)) + z[:, None]
    y = rng.normal(size=n)
    x = rng.normal(size=(n, 1))
    return z, m, y, x


def test_initial_state_copies_observed_half(arm_data):
    """Test that observed coordinates hold data and missing ones come from the same margin."""
    z, m, _, _ = arm_data
    t, mask = initial_potential_state(m, z, np.random.default_rng(0))
    assert t.shape == (40, 4)
    np.testing.assert_array_equal(t[z == 0][:, :2], m[z == 0])
    np.testing.assert_array_equal(t[z == 1][:, 2:], m[z == 1])
    np.testing.assert_array_equal(mask[z == 0], [[True, True, False, False]] * 20)
    assert set(t[z == 0, 2]) <= set(m[z == 1, 0])


def test_impute_updates_only_missing_coordinates(arm_data):
    """Test that observed values never move and acceptance is tallied per unit."""
    z, m, y, x = arm_data
    rng = RngStream(15).generator
    t, mask = initial_potential_state(m, z, rng)
    marginals = [normal_marginal(5.0, lower=0.0), normal_marginal(6.0, lower=0.0)] * 2
    h = np.column_stack([latent_column(p, t[:, j], x) for j, p in enumerate(marginals)])
    state = PotentialMediatorState(t, h, mask)
    outcome = OutcomeRegression(linear_outcome(0.0, [0.1, 0.1, 0.1, 0.1, 0.0], noise_var=1.0))
    acceptance = AcceptanceCounter()
    for _ in range(20):
        state = step3_impute(
            state,
            marginals,
            CorrelationMatrix.identity(2),
            (outcome, outcome),
            y,
            x,
            z,
            0.5,
            rng,
            acceptance,
        )
    np.testing.assert_array_equal(state.t[mask], t[mask])
    assert np.all(state.t >= 0.0)
    assert not np.array_equal(state.t[~mask], t[~mask])
    accepted, proposed = acceptance.counts["step3"]
    assert proposed == 20 * 2 * 40
    assert 0 < accepted < proposed


def test_impute_needs_one_marginal_per_coordinate(arm_data):
    """Test the argument-count check."""
    z, m, y, x = arm_data
    rng = np.random.default_rng(1)
    t, mask = initial_potential_state(m, z, rng)
    state = PotentialMediatorState(t, np.zeros_like(t), mask)
    outcome = OutcomeRegression(linear_outcome(0.0, np.zeros(5)))
    with pytest.raises(InvalidParameterError, match="one marginal per coordinate"):
        step3_impute(
            state,
            [normal_marginal(3.0)],
            CorrelationMatrix.identity(2),
            (outcome, outcome),
            y,
            x,
            z,
            0.5,
            rng,
        )


def test_imputation_rate_band(caplog):
    """Test the warning when the acceptance rate leaves [0.15, 0.6]."""
    low = AcceptanceCounter()
    low.record("step3", 5, 100)
    assert check_imputation_rate(low) is False
    assert "imputation_step_scale" in caplog.text
    fine = AcceptanceCounter()
    fine.record("step3", 30, 100)
    assert check_imputation_rate(fine) is True


def test_counterfactual_draws_pick_arm_columns(two_mediator_draw):
    """Test that pattern (1, 0) takes M_1 from arm 1 and M_2 from arm 0."""
    rng = RngStream(16).generator
    draws = draw_counterfactual_mediators(two_mediator_draw, [0.0], (1, 0), 5000, rng)
    assert draws.shape == (5000, 2)
    # arm-major means: M(0) = (0, 1), M(1) = (1, 3)
    np.testing.assert_allclose(draws.mean(axis=0), [1.0, 1.0], atol=0.06)


def test_counterfactual_pattern_validation(two_mediator_draw):
    """Test the pattern length and value checks."""
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidParameterError, match="pattern must hold 2"):
        draw_counterfactual_mediators(two_mediator_draw, [0.0], (1,), 10, rng)
    with pytest.raises(InvalidParameterError, match="pattern"):
        draw_counterfactual_mediators(two_mediator_draw, [0.0], (1, 2), 10, rng)
