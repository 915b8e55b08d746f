"""Tests for TOML run configuration loading and overrides."""

import pytest

from services.analysis import load_config, parse_config, with_overrides
from services.errors import ConfigError
from services.model import PriorMode

CONFIG_TOML = """
[data]
path = "data/plants.csv"
schema = "power_plant"
lower_bound = -inf

[chain]
n_iter = 400
n_burn = 100
seed = 11
prior_mode = "uniform"

[effects]
n_mc = 30
strata_pair = [1, 3]

[sensitivity]
epsilons = [0.5, inf]
chi = [[1.0, 1.2, 1.0]]
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "runs" / "plants.toml"
    path.parent.mkdir()
    path.write_text(CONFIG_TOML, encoding="utf-8")
    return path


def test_load_config_sections(config_path):
    """Test section parsing, bundled schema merging and the folded sensitivity grid."""
    config = load_config(config_path)
    assert config.data.path == (config_path.parent / "data" / "plants.csv").resolve()
    assert config.data.columns.treatment_column == "scrubber"
    assert config.data.columns.lower_bound == float("-inf")
    assert config.chain.n_iter == 400
    assert config.chain.prior_mode is PriorMode.UNIFORM
    assert config.seed == 11
    assert config.effects.strata_indices == (0, 2)
    assert config.chain.sensitivity.chi == [[1.0, 1.2, 1.0]]
    assert config.diagnostics.n_rep == 20


def test_config_hash_is_stable(config_path):
    """Test that the hash depends only on parsed values."""
    first = load_config(config_path)
    second = load_config(config_path)
    assert first.config_hash() == second.config_hash()
    changed = with_overrides(first, {"seed": 12})
    assert changed.config_hash() != first.config_hash()


def test_overrides_skip_unset_flags(config_path):
    """Test that None flags leave the file's values in place."""
    config = load_config(config_path)
    updated = with_overrides(config, {"n_iter": 500, "thin": None}, output_dir="out")
    assert updated.chain.n_iter == 500
    assert updated.chain.thin == config.chain.thin
    assert updated.output.dir == "out"
    assert with_overrides(config, {"thin": None}) is config


def test_invalid_override(config_path):
    """Test that a burn-in past the end is rejected."""
    with pytest.raises(ConfigError, match="invalid chain override"):
        with_overrides(load_config(config_path), {"n_burn": 1000})


def test_missing_and_malformed_files(tmp_path):
    """Test errors for absent files and bad TOML."""
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[chain\nn_iter = 1", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(bad)


@pytest.mark.parametrize(
    ("raw", "match"),
    [
        ({"chain": {"n_iter": 10}}, "needs a path"),
        ({"data": {"path": "d.csv", "schema": "nope"}}, "unknown bundled schema"),
        ({"data": {"path": "d.csv", "mediator_columns": ["m"]}, "chain": {"k_max": 1}}, "k_max"),
        ({"data": {"path": "d.csv", "mediator_columns": ["m"]}, "extra": {}}, "extra"),
        (
            {
                "data": {"path": "d.csv", "mediator_columns": ["m"]},
                "effects": {"strata_pair": [2, 2]},
            },
            "distinct",
        ),
    ],
)
def test_parse_config_errors(raw, match):
    """Test that invalid documents raise ConfigError."""
    with pytest.raises(ConfigError, match=match):
        parse_config(raw)
