"""Tests for natural direct/indirect effects, CEP surfaces and posterior summaries."""

import numpy as np
import pandas as pd
import pytest

from services.distributions import RngStream
from services.effects import (
    cep_surface,
    control_patterns,
    default_grid,
    estimand_names,
    map_draws,
    mediation_effects,
    posterior_effects,
    required_patterns,
    summarize,
    switched,
)
from services.errors import InvalidParameterError
from services.model import Dataset
from services.tests.conftest import linear_outcome, make_draw


@pytest.fixture
def unit_dataset():
    rng = np.random.default_rng(40)
    n = 200
    return Dataset(
        z=np.arange(n) % 2,
        m=rng.normal(size=(n, 2)),
        y=rng.normal(size=n),
        x=rng.normal(size=(n, 1)),
        lower_bound=-np.inf,
    )


def test_estimand_names_for_three_mediators():
    """Test the estimand list, including pairwise joint effects and overlaps."""
    names = estimand_names(3)
    assert names[:3] == ["TE", "NDE", "JNIE"]
    assert {"NIE_1", "NIE_3", "JNIE_12", "JNIE_23", "OVERLAP_13"} <= set(names)
    assert len(names) == 3 + 3 + 3 + 3
    assert "NIE*_2" in estimand_names(3, nie_star=True)


def test_required_patterns():
    """Test the Y(1; M(p)) patterns needed for K=3."""
    patterns = required_patterns(3)
    assert (1, 1, 1) in patterns and (0, 0, 0) in patterns
    assert switched(3, (0, 2)) == (0, 1, 0)
    assert len(patterns) == 8
    assert control_patterns(2) == [(0, 0)]
    assert len(control_patterns(2, nie_star=True)) == 4


def test_linear_outcome_effects_match_closed_form(two_mediator_draw, unit_dataset):
    """Test NDE, NIE and JNIE against the linear-outcome closed form."""
    rng = RngStream(41).generator
    effects = mediation_effects(two_mediator_draw, unit_dataset, 50, rng)
    # slopes (2, 0.5) on M(1); arm means M(0) = (0, 1), M(1) = (1, 3)
    assert effects["NIE_1"] == pytest.approx(2.0, abs=0.1)
    assert effects["NIE_2"] == pytest.approx(1.0, abs=0.1)
    assert effects["JNIE"] == pytest.approx(3.0, abs=0.15)
    assert effects["NDE"] == pytest.approx(1.5, abs=0.1)
    assert effects["TE"] == pytest.approx(effects["NDE"] + effects["JNIE"], abs=1e-12)


def test_overlap_vanishes_without_interaction(two_mediator_draw, unit_dataset):
    """Test that a linear outcome gives zero overlap and JNIE_12 equal to JNIE for K=2."""
    effects = mediation_effects(two_mediator_draw, unit_dataset, 20, RngStream(42).generator)
    assert effects["OVERLAP_12"] == pytest.approx(0.0, abs=1e-10)
    assert effects["JNIE_12"] == pytest.approx(effects["JNIE"], abs=1e-12)


def test_alternative_indirect_effects(two_mediator_draw, unit_dataset):
    """Test that NIE* vanishes when the control outcome ignores the mediators."""
    effects = mediation_effects(
        two_mediator_draw, unit_dataset, 20, RngStream(43).generator, nie_star=True
    )
    assert effects["NIE*_1"] == pytest.approx(0.0, abs=1e-12)


def test_mediation_rejects_zero_mc(two_mediator_draw, unit_dataset):
    """Test the Monte Carlo size check."""
    with pytest.raises(InvalidParameterError, match="n_mc"):
        mediation_effects(two_mediator_draw, unit_dataset, 0, np.random.default_rng(0))


def test_posterior_effects_are_worker_independent(two_mediator_draw, unit_dataset):
    """Test per-draw streams give identical results with one or several workers."""
    imputed = np.random.default_rng(46).normal(size=(200, 4))
    draw = make_draw([0.0, 1.0, 1.0, 3.0], two_mediator_draw.outcomes, mediators=imputed)
    draws = [draw] * 3
    kwargs = dict(n_mc=10, seed=5, dissociative_multiplier=0.25, associative_multiplier=0.25)
    serial = posterior_effects(draws, unit_dataset, workers=1, **kwargs)
    threaded = posterior_effects(draws, unit_dataset, workers=3, **kwargs)
    pd.testing.assert_frame_equal(serial.mediation_draws, threaded.mediation_draws)
    per_draw = serial.mediation_draws.pivot(index="draw", columns="estimand", values="value")
    np.testing.assert_allclose(per_draw["TE"], per_draw["NDE"] + per_draw["JNIE"], atol=1e-12)
    assert set(serial.mediation["estimand"]) == set(estimand_names(2))
    assert serial.strata_cross is not None


def test_summarize_excludes_undefined_draws():
    """Test posterior statistics with NaN values dropped."""
    per_draw = pd.DataFrame(
        {
            "estimand": ["A"] * 4 + ["B"] * 2,
            "value": [1.0, -1.0, 3.0, np.nan, np.nan, np.nan],
        }
    )
    summary = summarize(per_draw).set_index("estimand")
    assert summary.loc["A", "mean"] == pytest.approx(1.0)
    assert summary.loc["A", "p_negative"] == pytest.approx(1.0 / 3.0)
    assert summary.loc["A", "n_defined"] == 3
    assert summary.loc["B", "n_defined"] == 0
    assert np.isnan(summary.loc["B", "mean"])


def test_map_draws_preserves_order():
    """Test threaded evaluation returns results in draw order."""
    results = map_draws(lambda i, d: (i, d), ["a", "b", "c", "d"], workers=4)
    assert results == [(0, "a"), (1, "b"), (2, "c"), (3, "d")]


def test_cep_surface_single_mediator(unit_dataset):
    """Test that with K=1 the surface is exactly a1 - a0 + slope * m1."""
    treated = linear_outcome(1.0, [0.0, 2.0, 0.0])
    control = linear_outcome(0.5, [0.0, 0.0, 0.0])
    draw = make_draw([0.0, 1.0], (control, treated), mediators=np.zeros((200, 2)))
    single = unit_dataset.select_mediators([0])
    grid = np.array([-1.0, 0.0, 1.0])
    table, cloud = cep_surface([draw], single, 0, grid, 3, RngStream(44).generator)
    assert len(table) == 9
    np.testing.assert_allclose(table["effect"], 0.5 + 2.0 * table["m1"], atol=1e-12)
    assert list(cloud.columns) == ["unit", "m0", "m1"]
    assert len(cloud) == 200


def test_cep_surface_subsamples_units(two_mediator_draw, unit_dataset):
    """Test the unit subsample and the mediator index check."""
    draw = make_draw(
        [0.0, 1.0, 1.0, 3.0],
        two_mediator_draw.outcomes,
        mediators=np.zeros((200, 4)),
    )
    grid = default_grid(unit_dataset, 1, 4)
    assert grid.min() == unit_dataset.m[:, 1].min()
    table, _ = cep_surface([draw], unit_dataset, 1, grid, 50, RngStream(45).generator, 10)
    # effect = 1 + 2 E[M_1(1)] + 0.5 m1 with E[M_1(1)] = 1
    np.testing.assert_allclose(table["effect"], 3.0 + 0.5 * table["m1"], atol=0.4)
    with pytest.raises(InvalidParameterError, match="out of range"):
        cep_surface([draw], unit_dataset, 2, grid, 2, RngStream(45).generator)
