"""Encoding shared by the artifact backends."""

from __future__ import annotations

import io
import json
import re
from collections.abc import Mapping
from typing import Any

import pandas as pd

from ..errors import InvalidArtifactNameError

_NAME_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.\-]*$")
FLOAT_FORMAT = "%.17g"


def validate_name(name: str) -> str:
    """Only plain file names are accepted; no separators or parent references."""
    if not isinstance(name, str) or not _NAME_PATTERN.match(name) or ".." in name:
        raise InvalidArtifactNameError(f"invalid artifact name {name!r}")
    return name


def table_to_bytes(table: pd.DataFrame) -> bytes:
    return table.to_csv(index=False, float_format=FLOAT_FORMAT).encode("utf-8")


def table_from_bytes(data: bytes) -> pd.DataFrame:
    return pd.read_csv(io.BytesIO(data), encoding="utf-8", float_precision="round_trip")


def json_to_bytes(data: Mapping[str, Any]) -> bytes:
    return json.dumps(data, ensure_ascii=False, indent=2, default=str).encode("utf-8")


def json_from_bytes(data: bytes) -> dict[str, Any]:
    return json.loads(data.decode("utf-8"))
