"""Service exports for the mediation engine."""

from .analysis import export_results, load_config, load_dataset, run_analysis
from .errors import EngineError
from .mcmc import run_chain
from .storage import ArtifactStore, LocalArtifactStore, S3ArtifactStore, create_store

__all__ = [
    "ArtifactStore",
    "EngineError",
    "LocalArtifactStore",
    "S3ArtifactStore",
    "create_store",
    "export_results",
    "load_config",
    "load_dataset",
    "run_analysis",
    "run_chain",
]
