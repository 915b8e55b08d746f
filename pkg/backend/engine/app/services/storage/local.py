"""Artifact store on the local filesystem."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import pandas as pd

from ..errors import ArtifactNotFoundError, StorageError
from .codec import (
    json_from_bytes,
    json_to_bytes,
    table_from_bytes,
    table_to_bytes,
    validate_name,
)

logger = logging.getLogger(__name__)


class LocalArtifactStore:
    """Artifacts written as files under one run directory."""

    def __init__(self, base_dir: Path | str):
        self.base_dir = Path(base_dir)
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        return self.base_dir / validate_name(name)

    @property
    def root(self) -> str:
        return str(self.base_dir)

    def location(self, name: str) -> str:
        return str(self._path(name))

    def exists(self, name: str) -> bool:
        return self._path(name).is_file()

    def save_bytes(self, name: str, data: bytes) -> str:
        path = self._path(name)
        try:
            path.write_bytes(data)
        except OSError as exc:
            raise StorageError(f"failed to write {path}: {exc}") from exc
        logger.debug("Wrote %s (%d bytes)", path, len(data))
        return str(path)

    def load_bytes(self, name: str) -> bytes:
        path = self._path(name)
        if not path.is_file():
            raise ArtifactNotFoundError(f"artifact {name} not found in {self.base_dir}")
        return path.read_bytes()

    def save_table(self, name: str, table: pd.DataFrame) -> str:
        return self.save_bytes(name, table_to_bytes(table))

    def load_table(self, name: str) -> pd.DataFrame:
        return table_from_bytes(self.load_bytes(name))

    def save_json(self, name: str, data: Mapping[str, Any]) -> str:
        return self.save_bytes(name, json_to_bytes(data))

    def load_json(self, name: str) -> dict[str, Any]:
        return json_from_bytes(self.load_bytes(name))
