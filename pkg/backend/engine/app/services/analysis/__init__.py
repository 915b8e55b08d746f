"""Dataset ingestion, run configuration, the analysis pipeline and reports."""

from .dataset import (
    DatasetSchema,
    bundled_schema,
    dataset_frame,
    load_dataset,
    schema_for,
    write_dataset,
)
from .pipeline import (
    ARCHIVE_NAME,
    METADATA_NAME,
    AnalysisRun,
    compare_priors_stage,
    diagnose_stage,
    effects_stage,
    fit_stage,
    interval_widths,
    load_draws,
    run_analysis,
    run_stages,
    sensitivity_stage,
    single_mediator_stage,
    stamp,
    unstamp,
)
from .reports import ExportFormat, export_results, mediation_table, principal_table
from .run_config import (
    AnalysisConfig,
    DataConfig,
    DiagnosticsConfig,
    EffectsConfig,
    OutputConfig,
    load_config,
    parse_config,
    with_overrides,
)

__all__ = [
    "ARCHIVE_NAME",
    "METADATA_NAME",
    "AnalysisConfig",
    "AnalysisRun",
    "DataConfig",
    "DatasetSchema",
    "DiagnosticsConfig",
    "EffectsConfig",
    "ExportFormat",
    "OutputConfig",
    "bundled_schema",
    "compare_priors_stage",
    "dataset_frame",
    "diagnose_stage",
    "effects_stage",
    "export_results",
    "fit_stage",
    "interval_widths",
    "load_config",
    "load_dataset",
    "load_draws",
    "mediation_table",
    "parse_config",
    "principal_table",
    "run_analysis",
    "run_stages",
    "schema_for",
    "sensitivity_stage",
    "single_mediator_stage",
    "stamp",
    "unstamp",
    "with_overrides",
    "write_dataset",
]
