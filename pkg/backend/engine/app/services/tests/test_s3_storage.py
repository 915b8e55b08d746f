"""Tests for S3ArtifactStore."""

from unittest.mock import MagicMock, patch

import pandas as pd
import pytest
from botocore.exceptions import ClientError

from services.errors import ArtifactNotFoundError, ConfigError, StorageError
from services.storage import S3ArtifactStore


@pytest.fixture
def mock_s3_client():
    """Create a mock S3 client."""
    with patch("services.storage.s3.boto3.client") as mock_boto:
        mock_client = MagicMock()
        mock_boto.return_value = mock_client
        # head_bucket succeeds unless a test says otherwise
        mock_client.head_bucket.return_value = {}
        yield mock_client


def test_s3_store_initialization(mock_s3_client):
    """Test S3ArtifactStore initializes correctly."""
    store = S3ArtifactStore(bucket_name="test-bucket", prefix="/runs/a/", region="eu-west-3")

    assert store.bucket_name == "test-bucket"
    assert store.prefix == "runs/a"
    assert store.root == "s3://test-bucket/runs/a"
    mock_s3_client.head_bucket.assert_called_once_with(Bucket="test-bucket")


def test_s3_store_requires_bucket_name(mock_s3_client):
    """Test that bucket name is required."""
    with pytest.raises(ConfigError, match="bucket name is required"):
        S3ArtifactStore(bucket_name="")


def test_s3_store_bucket_not_found(mock_s3_client):
    """Test handling of non-existent bucket."""
    error = ClientError({"Error": {"Code": "404", "Message": "Not Found"}}, "HeadBucket")
    mock_s3_client.head_bucket.side_effect = error

    with pytest.raises(StorageError, match="does not exist"):
        S3ArtifactStore(bucket_name="nonexistent-bucket")


def test_s3_store_bucket_access_denied(mock_s3_client):
    """Test handling of access denied error."""
    error = ClientError({"Error": {"Code": "403", "Message": "Forbidden"}}, "HeadBucket")
    mock_s3_client.head_bucket.side_effect = error

    with pytest.raises(StorageError, match="Access denied"):
        S3ArtifactStore(bucket_name="forbidden-bucket")


def test_save_table_uses_prefixed_key(mock_s3_client):
    """Test that a table is uploaded as CSV under the run prefix."""
    store = S3ArtifactStore(bucket_name="test-bucket", prefix="runs/a")

    location = store.save_table("effects.csv", pd.DataFrame({"estimand": ["TE"], "value": [0.5]}))

    assert location == "s3://test-bucket/runs/a/effects.csv"
    call_kwargs = mock_s3_client.put_object.call_args.kwargs
    assert call_kwargs["Bucket"] == "test-bucket"
    assert call_kwargs["Key"] == "runs/a/effects.csv"
    assert call_kwargs["Body"] == b"estimand,value\nTE,0.5\n"
    assert call_kwargs["ContentType"].startswith("text/csv")


def test_save_bytes_defaults_content_type(mock_s3_client):
    """Test the content type of the binary draw archive."""
    store = S3ArtifactStore(bucket_name="test-bucket")

    store.save_bytes("draws.bin", b"\x00")

    call_kwargs = mock_s3_client.put_object.call_args.kwargs
    assert call_kwargs["Key"] == "draws.bin"
    assert call_kwargs["ContentType"] == "application/octet-stream"


def test_load_json_reads_body(mock_s3_client):
    """Test loading run metadata from an object body."""
    body = MagicMock()
    body.read.return_value = b'{"seed": 3}'
    mock_s3_client.get_object.return_value = {"Body": body}
    store = S3ArtifactStore(bucket_name="test-bucket", prefix="runs/a")

    assert store.load_json("run_metadata.json") == {"seed": 3}
    mock_s3_client.get_object.assert_called_once_with(
        Bucket="test-bucket", Key="runs/a/run_metadata.json"
    )


def test_load_missing_artifact(mock_s3_client):
    """Test loading a non-existent artifact."""
    error = ClientError({"Error": {"Code": "NoSuchKey", "Message": "Not Found"}}, "GetObject")
    mock_s3_client.get_object.side_effect = error
    store = S3ArtifactStore(bucket_name="test-bucket")

    with pytest.raises(ArtifactNotFoundError, match="not found"):
        store.load_bytes("draws.bin")


def test_exists_maps_not_found_to_false(mock_s3_client):
    """Test that a missing object is reported as absent rather than an error."""
    store = S3ArtifactStore(bucket_name="test-bucket")
    error = ClientError({"Error": {"Code": "404", "Message": "Not Found"}}, "HeadObject")
    mock_s3_client.head_object.side_effect = error

    assert store.exists("draws.bin") is False

    mock_s3_client.head_object.side_effect = None
    mock_s3_client.head_object.return_value = {"ContentLength": 10}
    assert store.exists("draws.bin") is True
