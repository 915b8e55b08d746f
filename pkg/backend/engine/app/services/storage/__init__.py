"""Artifact stores and the posterior draw archive."""

from .archive import MAGIC, VERSION, DrawArchive, decode_draws, encode_draws
from .factory import create_store
from .local import LocalArtifactStore
from .protocol import ArtifactStore
from .s3 import S3ArtifactStore

__all__ = [
    "MAGIC",
    "VERSION",
    "ArtifactStore",
    "DrawArchive",
    "LocalArtifactStore",
    "S3ArtifactStore",
    "create_store",
    "decode_draws",
    "encode_draws",
]
