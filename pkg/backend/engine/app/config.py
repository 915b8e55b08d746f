"""Engine settings loaded from environment variables."""

from __future__ import annotations

from enum import Enum
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class StorageBackend(str, Enum):
    """Supported artifact storage backends."""

    LOCAL = "local"
    S3 = "s3"


class Settings(BaseSettings):
    """Process-wide settings; analysis parameters live in the run config file."""

    model_config = SettingsConfigDict(
        # Look for .env in backend/ directory (parent of engine/)
        env_file=str(Path(__file__).parent.parent.parent / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Artifact storage
    storage_backend: StorageBackend = StorageBackend.LOCAL
    local_artifact_dir: str = "artifacts"

    # S3 configuration (used when storage_backend is S3)
    s3_bucket_name: str = ""
    s3_region: str = "eu-west-3"
    aws_profile: str = ""

    # Worker count for per-draw effects, sensitivity grids and replications
    engine_threads: int = 1

    log_level: str = "INFO"


# Global settings instance
settings = Settings()
