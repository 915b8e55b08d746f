"""Analysis run configuration read from a TOML file."""

from __future__ import annotations

import hashlib
import json
import logging
import tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..errors import ConfigError
from ..model import ChainConfig
from .dataset import DatasetSchema, bundled_schema

logger = logging.getLogger(__name__)


class DataConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    path: Path
    schema_name: str | None = None
    columns: DatasetSchema


class EffectsConfig(BaseModel):
    """Monte Carlo sizes and output options for the effect stage."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_mc: int = Field(default=100, ge=1)
    strata_pair: tuple[int, int] | None = (1, 2)
    cep_grid_size: int = Field(default=20, ge=2)
    cep_draws: int = Field(default=20, ge=1)
    cep_mc: int = Field(default=5, ge=1)
    cep_max_units: int | None = Field(default=None, ge=1)
    nie_star: bool = False
    effect_workers: int | None = Field(default=None, ge=1)

    @field_validator("strata_pair")
    @classmethod
    def _distinct_pair(cls, pair: tuple[int, int] | None) -> tuple[int, int] | None:
        if pair is not None and (pair[0] == pair[1] or min(pair) < 1):
            raise ValueError("strata_pair needs two distinct 1-based mediator indices")
        return pair

    @property
    def strata_indices(self) -> tuple[int, int] | None:
        """0-based pair of mediators for the strata cross table."""
        if self.strata_pair is None:
            return None
        return self.strata_pair[0] - 1, self.strata_pair[1] - 1


class DiagnosticsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_rep: int = Field(default=20, ge=1)
    parametric_draws: int = Field(default=200, ge=2)


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dir: str | None = None


class AnalysisConfig(BaseModel):
    """Everything one analysis run needs, as parsed from its config file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    data: DataConfig
    chain: ChainConfig = Field(default_factory=ChainConfig)
    effects: EffectsConfig = Field(default_factory=EffectsConfig)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @property
    def seed(self) -> int:
        return self.chain.seed

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the parsed configuration."""
        canonical = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _data_section(raw: dict[str, Any], base_dir: Path) -> DataConfig:
    raw = dict(raw)
    if "path" not in raw:
        raise ConfigError("[data] needs a path")
    path = Path(raw.pop("path"))
    if not path.is_absolute():
        path = (base_dir / path).resolve()
    schema_name = raw.pop("schema", None)
    columns = bundled_schema(schema_name).model_dump() if schema_name else {}
    columns.update(raw)
    return DataConfig(path=path, schema_name=schema_name, columns=DatasetSchema(**columns))


def parse_config(raw: dict[str, Any], base_dir: Path | str = ".") -> AnalysisConfig:
    """Validate a parsed TOML document; ``[sensitivity]`` is folded into the chain config."""
    raw = dict(raw)
    try:
        data = _data_section(raw.pop("data", {}), Path(base_dir))
        chain = dict(raw.pop("chain", {}))
        if "sensitivity" in raw:
            chain["sensitivity"] = raw.pop("sensitivity")
        return AnalysisConfig(data=data, chain=ChainConfig(**chain), **raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path: Path | str) -> AnalysisConfig:
    """Read and validate a run config file.

    Raises:
        ConfigError: unreadable file, TOML syntax error, unknown schema or invalid value.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    config = parse_config(raw, path.parent)
    logger.info("Loaded config %s (hash %s)", path, config.config_hash()[:12])
    return config


def with_overrides(
    config: AnalysisConfig,
    chain: dict[str, Any] | None = None,
    output_dir: str | None = None,
) -> AnalysisConfig:
    """Config with command-line chain flags and output directory applied on top."""
    update: dict[str, Any] = {}
    chain = {key: value for key, value in (chain or {}).items() if value is not None}
    try:
        if chain:
            update["chain"] = ChainConfig(**{**config.chain.model_dump(), **chain})
    except ValidationError as exc:
        raise ConfigError(f"invalid chain override: {exc}") from exc
    if output_dir is not None:
        update["output"] = OutputConfig(dir=output_dir)
    return config.model_copy(update=update) if update else config
