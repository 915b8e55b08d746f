"""Artifact store factory."""

from __future__ import annotations

from pathlib import Path

from .local import LocalArtifactStore
from .protocol import ArtifactStore
from .s3 import S3ArtifactStore


def create_store(location: str | Path | None = None) -> ArtifactStore:
    """Store for one run's artifacts, on the backend chosen in settings.

    ``location`` is a directory for the local backend and a key prefix for S3;
    it defaults to ``settings.local_artifact_dir``.
    """
    from app.config import StorageBackend, settings

    location = str(location) if location is not None else settings.local_artifact_dir
    if settings.storage_backend == StorageBackend.S3:
        return S3ArtifactStore(
            bucket_name=settings.s3_bucket_name,
            prefix=location,
            region=settings.s3_region,
            aws_profile=settings.aws_profile,
        )
    return LocalArtifactStore(Path(location).resolve())
