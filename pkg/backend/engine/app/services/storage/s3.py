"""Artifact store in an S3 bucket.

Artifacts of a run live under one key prefix, e.g. ``runs/2016-scrubbers/effects.csv``.
Credentials come from the named AWS profile when given, otherwise from the
default chain (environment variables, ``~/.aws/credentials``, IAM role).
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from typing import Any

import boto3
import pandas as pd
from botocore.exceptions import ClientError

from ..errors import ArtifactNotFoundError, ConfigError, StorageError
from .codec import (
    json_from_bytes,
    json_to_bytes,
    table_from_bytes,
    table_to_bytes,
    validate_name,
)

logger = logging.getLogger(__name__)

CONTENT_TYPES = {
    ".csv": "text/csv; charset=utf-8",
    ".json": "application/json",
    ".txt": "text/plain; charset=utf-8",
}
DEFAULT_CONTENT_TYPE = "application/octet-stream"


def _error_code(exc: ClientError) -> str:
    return exc.response.get("Error", {}).get("Code", "")


class S3ArtifactStore:
    """Artifacts stored as objects under ``prefix`` in one bucket."""

    def __init__(
        self,
        bucket_name: str,
        prefix: str = "",
        region: str = "eu-west-3",
        aws_profile: str = "",
    ):
        if not bucket_name:
            raise ConfigError("S3 bucket name is required")

        self.bucket_name = bucket_name
        self.prefix = prefix.strip("/")
        self.region = region

        if aws_profile:
            session = boto3.Session(profile_name=aws_profile)
            self.s3_client = session.client("s3", region_name=region)
        else:
            self.s3_client = boto3.client("s3", region_name=region)

        self._verify_bucket_exists()

    def _verify_bucket_exists(self) -> None:
        try:
            self.s3_client.head_bucket(Bucket=self.bucket_name)
        except ClientError as e:
            code = _error_code(e)
            if code == "404":
                raise StorageError(f"S3 bucket '{self.bucket_name}' does not exist") from e
            if code == "403":
                raise StorageError(f"Access denied to S3 bucket '{self.bucket_name}'") from e
            raise StorageError(f"Failed to verify S3 bucket '{self.bucket_name}': {e}") from e

    @property
    def root(self) -> str:
        return f"s3://{self.bucket_name}/{self.prefix}"

    def _key(self, name: str) -> str:
        name = validate_name(name)
        return f"{self.prefix}/{name}" if self.prefix else name

    def location(self, name: str) -> str:
        return f"s3://{self.bucket_name}/{self._key(name)}"

    def exists(self, name: str) -> bool:
        try:
            self.s3_client.head_object(Bucket=self.bucket_name, Key=self._key(name))
        except ClientError as exc:
            if _error_code(exc) in ("404", "NoSuchKey", "NotFound"):
                return False
            raise StorageError(f"Failed to check {self.location(name)}: {exc}") from exc
        return True

    def save_bytes(self, name: str, data: bytes) -> str:
        key = self._key(name)
        suffix = name[name.rfind(".") :] if "." in name else ""
        try:
            self.s3_client.put_object(
                Bucket=self.bucket_name,
                Key=key,
                Body=data,
                ContentType=CONTENT_TYPES.get(suffix, DEFAULT_CONTENT_TYPE),
            )
        except ClientError as exc:
            raise StorageError(f"Failed to save {self.location(name)}: {exc}") from exc
        logger.debug("Uploaded %s (%d bytes)", self.location(name), len(data))
        return self.location(name)

    def load_bytes(self, name: str) -> bytes:
        try:
            response = self.s3_client.get_object(Bucket=self.bucket_name, Key=self._key(name))
        except ClientError as exc:
            if _error_code(exc) in ("404", "NoSuchKey"):
                raise ArtifactNotFoundError(f"artifact {self.location(name)} not found") from exc
            raise StorageError(f"Failed to load {self.location(name)}: {exc}") from exc
        return response["Body"].read()

    def save_table(self, name: str, table: pd.DataFrame) -> str:
        return self.save_bytes(name, table_to_bytes(table))

    def load_table(self, name: str) -> pd.DataFrame:
        return table_from_bytes(self.load_bytes(name))

    def save_json(self, name: str, data: Mapping[str, Any]) -> str:
        return self.save_bytes(name, json_to_bytes(data))

    def load_json(self, name: str) -> dict[str, Any]:
        return json_from_bytes(self.load_bytes(name))
