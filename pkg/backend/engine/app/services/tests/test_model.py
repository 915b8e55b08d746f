"""Tests for the core model types, configuration and dataset validation."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from services.errors import DatasetValidationError, MalformedCorrelationError
from services.model import (
    ChainConfig,
    CorrelationMatrix,
    Dataset,
    ObservedUnit,
    PriorMode,
    SensitivityConfig,
    coordinate,
    validate_dataset,
)


@pytest.fixture
def small_dataset():
    return Dataset(
        z=[0, 1, 0, 1],
        m=[[1.0, 2.0], [1.5, 2.5], [0.5, 1.0], [2.0, 3.0]],
        y=[1.0, 2.0, 0.5, 3.0],
        x=[[0.1], [0.2], [0.3], [0.4]],
    )


def test_dataset_shapes_and_defaults(small_dataset):
    """Test derived sizes and default names."""
    assert (small_dataset.n, small_dataset.k, small_dataset.p) == (4, 2, 1)
    assert small_dataset.mediator_names == ("m1", "m2")
    assert small_dataset.ids == ("1", "2", "3", "4")
    np.testing.assert_array_equal(small_dataset.arm(1), [1, 3])


def test_observed_mask_is_arm_major(small_dataset):
    """Test that control units observe the first K coordinates."""
    mask = small_dataset.observed_mask()
    np.testing.assert_array_equal(mask[0], [True, True, False, False])
    np.testing.assert_array_equal(mask[1], [False, False, True, True])
    assert coordinate(1, 0, 2) == 2


def test_dataset_from_units_round_trip(small_dataset):
    """Test building a dataset from unit records."""
    rebuilt = Dataset.from_units(small_dataset.units)
    np.testing.assert_array_equal(rebuilt.m, small_dataset.m)
    assert rebuilt.units[0] == ObservedUnit(0, (1.0, 2.0), 1.0, (0.1,))


def test_select_mediators_keeps_names():
    """Test the single-mediator restriction."""
    dataset = Dataset(
        z=[0, 1],
        m=[[1.0, 2.0], [3.0, 4.0]],
        y=[0.0, 1.0],
        x=[[0.0], [1.0]],
        mediator_names=("so2", "nox"),
    )
    single = dataset.select_mediators([1])
    assert single.k == 1
    assert single.mediator_names == ("nox",)
    np.testing.assert_array_equal(single.m[:, 0], [2.0, 4.0])


def test_validate_dataset_collects_every_violation():
    """Test that all violations are reported together."""
    dataset = Dataset(
        z=[0, 0, 2],
        m=[[1.0], [-1.0], [np.nan]],
        y=[1.0, 2.0, 3.0],
        x=[[0.0], [0.0], [0.0]],
        lower_bound=0.0,
    )
    with pytest.raises(DatasetValidationError) as excinfo:
        validate_dataset(dataset)
    errors = excinfo.value.errors
    assert any("treatment must be 0 or 1" in e for e in errors)
    assert any("empty treated arm" in e for e in errors)
    assert any("below bound" in e for e in errors)
    assert any("non-finite mediator" in e for e in errors)


def test_validate_dataset_accepts_valid(small_dataset):
    """Test a valid dataset passes unchanged."""
    assert validate_dataset(small_dataset) is small_dataset


def test_correlation_requires_unit_diagonal():
    """Test correlation matrix validation."""
    with pytest.raises(MalformedCorrelationError, match="diagonal"):
        CorrelationMatrix(np.diag([1.0, 2.0]))
    with pytest.raises(MalformedCorrelationError, match="symmetric"):
        CorrelationMatrix(np.array([[1.0, 0.2], [0.1, 1.0]]))
    with pytest.raises(MalformedCorrelationError, match="positive definite"):
        CorrelationMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_correlation_blocks_and_inverse():
    """Test within/cross blocks and the cached inverse."""
    values = np.eye(4)
    values[0, 1] = values[1, 0] = 0.3
    values[0, 2] = values[2, 0] = 0.2
    r = CorrelationMatrix(values, PriorMode.RHO_CONSTRAINED, 0.2)
    np.testing.assert_allclose(r.within(0), [[1.0, 0.3], [0.3, 1.0]])
    assert r.cross()[0, 0] == pytest.approx(0.2)
    np.testing.assert_allclose(r.inverse @ r.values, np.eye(4), atol=1e-12)
    assert r.log_det == pytest.approx(np.log(np.linalg.det(values)))


def test_rho_constrained_needs_rho():
    """Test that rho_constrained mode rejects a missing rho."""
    with pytest.raises(MalformedCorrelationError, match="rho"):
        CorrelationMatrix(np.eye(2), PriorMode.RHO_CONSTRAINED)


def test_chain_config_retention():
    """Test burn-in and thinning bookkeeping."""
    config = ChainConfig(n_iter=20, n_burn=10, thin=5)
    assert [i for i in range(1, 21) if config.is_retained(i)] == [15, 20]
    assert config.n_retained == 2


def test_chain_config_rejects_burn_past_end():
    """Test the burn-in check."""
    with pytest.raises(ValidationError, match="n_burn"):
        ChainConfig(n_iter=10, n_burn=10)


def test_chain_config_orders_effect_thresholds():
    """Test that the associative multiplier may not fall below the dissociative one."""
    with pytest.raises(ValidationError, match="associative_multiplier"):
        ChainConfig(dissociative_multiplier=0.5, associative_multiplier=0.25)
    config = ChainConfig(dissociative_multiplier=0.25, associative_multiplier=0.5)
    assert config.associative_multiplier == 0.5


def test_sensitivity_config_validation():
    """Test epsilon and chi constraints, with infinite epsilon allowed."""
    config = SensitivityConfig(epsilons=[1.0, math.inf], chi=[[1.0, 1.5]])
    assert config.epsilons[-1] == math.inf
    with pytest.raises(ValidationError, match="chi vectors"):
        SensitivityConfig(chi=[[0.5, 1.0]])
    with pytest.raises(ValidationError, match="positive"):
        SensitivityConfig(epsilons=[0.0])
