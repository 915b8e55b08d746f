"""End-to-end tests of the analysis stages, exports and the command line on a tiny run."""

import numpy as np
import pandas as pd
import pytest

from app.main import main
from services.analysis import (
    METADATA_NAME,
    AnalysisRun,
    ExportFormat,
    export_results,
    load_config,
    load_draws,
    mediation_table,
    principal_table,
    run_analysis,
    stamp,
    unstamp,
)
from services.errors import ArtifactNotFoundError
from services.model import PriorMode
from services.storage import LocalArtifactStore

CONFIG_TOML = """
[data]
path = "trial.csv"
id_column = "id"
treatment_column = "z"
mediator_columns = ["m1", "m2"]
outcome_column = "y"
covariate_columns = ["age"]
lower_bound = 0.0

[chain]
n_iter = 20
n_burn = 10
thin = 5
k_max = 3
outcome_truncation = 5
seed = 5

[effects]
n_mc = 2
cep_grid_size = 3
cep_draws = 2
cep_mc = 1
cep_max_units = 5

[diagnostics]
n_rep = 2
parametric_draws = 5

[sensitivity]
epsilons = [1.0]
chi = [[1.0, 1.0], [1.5, 1.0]]
"""


@pytest.fixture
def config_path(tmp_path):
    rng = np.random.default_rng(100)
    n = 60
    z = np.arange(n) % 2
    age = rng.normal(50.0, 10.0, size=n)
    m = 5.0 + 0.5 * z[:, None] + 0.02 * (age[:, None] - 50.0) + rng.normal(size=(n, 2))
    y = 1.0 + z + m.sum(axis=1) + rng.normal(size=n)
    frame = pd.DataFrame({"id": [f"u{i}" for i in range(n)], "z": z})
    frame[["m1", "m2"]] = m
    frame["y"] = y
    frame["age"] = age
    frame.to_csv(tmp_path / "trial.csv", index=False)
    path = tmp_path / "run.toml"
    path.write_text(CONFIG_TOML, encoding="utf-8")
    return path


@pytest.fixture
def finished_run(tmp_path, config_path):
    store = LocalArtifactStore(tmp_path / "out")
    return run_analysis(config_path, store=store, workers=1)


def test_run_writes_every_stage(finished_run):
    """Test the artifacts and metadata written by a full run."""
    store = finished_run.store
    for name in (
        "draws.bin",
        "trace.csv",
        "acceptance.csv",
        "effects.csv",
        "effects_summary.csv",
        "principal_summary.csv",
        "strata_cross.csv",
        "cep_surface_1.csv",
        "cep_points_2.csv",
        "sensitivity.csv",
        "chi_bounds.csv",
        "diagnostics.csv",
        "trace_summary.csv",
        "predictive.csv",
    ):
        assert store.exists(name), name
    metadata = store.load_json(METADATA_NAME)
    assert set(metadata["stages"]) == {"fit", "effects", "sensitivity", "diagnose"}
    assert metadata["seed"] == 5
    assert metadata["config_hash"] == finished_run.config_hash
    assert metadata["dataset"] == {"n": 60, "k": 2, "p": 1}


def test_tables_are_stamped(finished_run):
    """Test the seed and config-hash columns on every table."""
    effects = finished_run.store.load_table("effects.csv")
    assert (effects["run_seed"] == 5).all()
    assert (effects["config_hash"] == finished_run.config_hash).all()
    assert "run_seed" not in unstamp(effects).columns


def test_archived_draws_reload(finished_run, config_path):
    """Test that a reopened run reads the archive written by the fit stage."""
    run = AnalysisRun.open(load_config(config_path), finished_run.store)
    draws = load_draws(run)
    assert len(draws) == 2
    assert draws[0].mediators.shape == (60, 4)
    assert draws[0].correlation.prior_mode is PriorMode.RHO_CONSTRAINED


def test_export_tables(finished_run):
    """Test the CSV and text exports of a finished run."""
    written = export_results(finished_run.store, ExportFormat.CSV)
    assert [w.rsplit("/", 1)[-1] for w in written] == ["mediation_table.csv", "principal_table.csv"]
    table = unstamp(finished_run.store.load_table("mediation_table.csv"))
    expected = ["TE", "NDE", "NIE_1", "NIE_2", "JNIE_12", "JNIE", "OVERLAP_12"]
    assert list(table["estimand"]) == expected
    export_results(finished_run.store, "summary-text")
    text = finished_run.store.load_bytes("summary.txt").decode("utf-8")
    assert "Mediation effects" in text
    assert "prior_comparison.csv absent" in text


def test_export_requires_metadata(tmp_path):
    """Test the error for a directory without a finished run."""
    with pytest.raises(ArtifactNotFoundError, match=METADATA_NAME):
        export_results(LocalArtifactStore(tmp_path))


def test_mediation_table_order():
    """Test the reporting order and dropped extra columns."""
    summary = pd.DataFrame(
        {
            "estimand": ["JNIE", "NIE_1", "TE", "NDE"],
            "mean": [1.0, 2.0, 3.0, 4.0],
            "sd": 0.1,
            "q2.5": 0.0,
            "q97.5": 5.0,
            "p_negative": 0.0,
            "n_defined": 10,
        }
    )
    table = mediation_table(stamp(summary, 1, "h"), 1)
    assert list(table["estimand"]) == ["TE", "NDE", "NIE_1", "JNIE"]
    assert "n_defined" not in table.columns


def test_principal_table_cells():
    """Test the effect-by-subset layout with NA for undefined strata."""
    summary = pd.DataFrame(
        {
            "estimand": ["TE", "EDE{1}", "EAE+{1}", "EDE{1,2}"],
            "mean": [1.0, 0.25, np.nan, -0.5],
            "sd": [0.1, 0.05, np.nan, 0.2],
        }
    )
    table = principal_table(summary).set_index("effect")
    assert list(table.columns) == ["{1}", "{1,2}"]
    assert table.loc["EDE", "{1}"] == "0.250 (0.050)"
    assert table.loc["EAE+", "{1}"] == "NA"
    assert table.loc["EAE-", "{1,2}"] == "NA"


def test_cli_exit_codes(tmp_path):
    """Test the configuration and runtime exit codes."""
    assert main(["fit", str(tmp_path / "absent.toml")]) == 1
    assert main(["export", str(tmp_path / "empty")]) == 2
