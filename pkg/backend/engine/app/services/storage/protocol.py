"""Artifact store protocol definition."""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any, Protocol

import pandas as pd


class ArtifactStore(Protocol):
    """Interface shared by every place a run can write its artifacts to.

    Artifact names are plain file names (``effects.csv``, ``draws.bin``);
    each backend decides where they live.
    """

    def save_bytes(self, name: str, data: bytes) -> str:
        """Persist raw bytes and return the artifact location."""
        ...

    def load_bytes(self, name: str) -> bytes:
        ...

    def save_table(self, name: str, table: pd.DataFrame) -> str:
        """Write a table as UTF-8 CSV with a header row and full float precision."""
        ...

    def load_table(self, name: str) -> pd.DataFrame:
        ...

    def save_json(self, name: str, data: Mapping[str, Any]) -> str:
        ...

    def load_json(self, name: str) -> dict[str, Any]:
        ...

    def exists(self, name: str) -> bool:
        ...

    def location(self, name: str) -> str:
        """Path or URI the artifact is (or would be) stored at."""
        ...

    @property
    def root(self) -> str:
        """Directory or URI prefix holding every artifact of the run."""
        ...
