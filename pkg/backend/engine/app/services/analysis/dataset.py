"""Reading and writing analysis datasets as CSV."""

from __future__ import annotations

import logging
import tomllib
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError, DatasetValidationError
from ..model import IDENTITY_TRANSFORM, LOG_TRANSFORM, Dataset, validate_dataset

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).parent / "schemas"
FLOAT_FORMAT = "%.17g"
HEADER_LINE = 1


class DatasetSchema(BaseModel):
    """Column mapping from a CSV file to the analysis variables."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id_column: str = "id"
    treatment_column: str = "z"
    mediator_columns: list[str] = Field(min_length=1)
    outcome_column: str = "y"
    covariate_columns: list[str] = Field(default_factory=list)
    log_mediators: list[str] = Field(default_factory=list)
    lower_bound: float = 0.0

    @model_validator(mode="after")
    def _log_columns_are_mediators(self) -> DatasetSchema:
        unknown = set(self.log_mediators) - set(self.mediator_columns)
        if unknown:
            raise ValueError(f"log_mediators are not mediator columns: {sorted(unknown)}")
        return self

    @property
    def columns(self) -> list[str]:
        return [
            self.id_column,
            self.treatment_column,
            *self.mediator_columns,
            self.outcome_column,
            *self.covariate_columns,
        ]


def bundled_schema(name: str) -> DatasetSchema:
    path = SCHEMA_DIR / f"{name}.toml"
    if not path.is_file():
        available = sorted(p.stem for p in SCHEMA_DIR.glob("*.toml"))
        raise ConfigError(f"unknown bundled schema {name!r}; available: {available}")
    try:
        return DatasetSchema(**tomllib.loads(path.read_text(encoding="utf-8")))
    except (tomllib.TOMLDecodeError, ValidationError) as exc:
        raise ConfigError(f"bundled schema {name!r} is invalid: {exc}") from exc


def _numeric_block(frame: pd.DataFrame, columns: list[str], errors: list[str]) -> np.ndarray:
    """Parse cells as floats, reporting each bad cell with its file line and column."""
    out = np.empty((len(frame), len(columns)))
    for c, column in enumerate(columns):
        raw = frame[column]
        parsed = pd.to_numeric(raw.str.strip(), errors="coerce")
        for i in np.flatnonzero(parsed.isna().to_numpy()):
            cell = raw.iloc[i]
            line = i + HEADER_LINE + 1
            if cell is None or (isinstance(cell, str) and not cell.strip()):
                errors.append(f"line {line}, column {column}: missing value")
            else:
                errors.append(f"line {line}, column {column}: non-numeric value {cell!r}")
        out[:, c] = parsed.to_numpy(dtype=float)
    return out


def load_dataset(path: Path | str, schema: DatasetSchema) -> Dataset:
    """Parse, transform and validate a dataset file.

    Raises:
        DatasetValidationError: with every missing column, bad cell, duplicate id
            or transform violation, each naming its line and column.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"dataset file {path} does not exist") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetValidationError([f"{path}: cannot be parsed as CSV: {exc}"]) from exc

    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise DatasetValidationError([f"missing column {c}" for c in missing])

    errors: list[str] = []
    ids = frame[schema.id_column].str.strip()
    duplicated = ids.duplicated(keep="first").to_numpy()
    for i in np.flatnonzero(duplicated):
        errors.append(
            f"line {i + HEADER_LINE + 1}, column {schema.id_column}: duplicate id {ids.iloc[i]!r}"
        )
    z = _numeric_block(frame, [schema.treatment_column], errors)[:, 0]
    for i in np.flatnonzero(~np.isin(z, (0.0, 1.0)) & ~np.isnan(z)):
        errors.append(
            f"line {i + HEADER_LINE + 1}, column {schema.treatment_column}: "
            f"treatment must be 0 or 1, got {z[i]:g}"
        )
    m = _numeric_block(frame, schema.mediator_columns, errors)
    y = _numeric_block(frame, [schema.outcome_column], errors)[:, 0]
    x = _numeric_block(frame, schema.covariate_columns, errors)

    transforms = []
    for k, column in enumerate(schema.mediator_columns):
        if column not in schema.log_mediators:
            transforms.append(IDENTITY_TRANSFORM)
            continue
        transforms.append(LOG_TRANSFORM)
        for i in np.flatnonzero(~(m[:, k] > 0) & ~np.isnan(m[:, k])):
            errors.append(
                f"line {i + HEADER_LINE + 1}, column {column}: log of nonpositive value "
                f"{m[i, k]:g}"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            m[:, k] = np.log(m[:, k])

    if errors:
        raise DatasetValidationError(errors)
    dataset = Dataset(
        z=z.astype(int),
        m=m,
        y=y,
        x=x,
        lower_bound=schema.lower_bound,
        ids=tuple(ids),
        mediator_names=tuple(schema.mediator_columns),
        covariate_names=tuple(schema.covariate_columns),
        mediator_transforms=tuple(transforms),
    )
    validate_dataset(dataset)
    logger.info(
        "Loaded %s: n=%d (%d treated), K=%d, P=%d",
        path,
        dataset.n,
        int(dataset.z.sum()),
        dataset.k,
        dataset.p,
    )
    return dataset


def dataset_frame(dataset: Dataset, schema: DatasetSchema | None = None) -> pd.DataFrame:
    """Dataset as a table on the analysis scale, with columns named per ``schema``."""
    schema = schema or schema_for(dataset)
    frame = pd.DataFrame({schema.id_column: list(dataset.ids), schema.treatment_column: dataset.z})
    for k, column in enumerate(schema.mediator_columns):
        frame[column] = dataset.m[:, k]
    frame[schema.outcome_column] = dataset.y
    for p, column in enumerate(schema.covariate_columns):
        frame[column] = dataset.x[:, p]
    return frame


def schema_for(dataset: Dataset) -> DatasetSchema:
    """Schema that reads back ``write_dataset`` output; transforms are already applied."""
    return DatasetSchema(
        mediator_columns=list(dataset.mediator_names),
        covariate_columns=list(dataset.covariate_names),
        lower_bound=dataset.lower_bound,
    )


def write_dataset(dataset: Dataset, path: Path | str) -> DatasetSchema:
    """Write on the analysis scale at full precision; returns the schema to read it back."""
    schema = schema_for(dataset)
    dataset_frame(dataset, schema).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return schema
