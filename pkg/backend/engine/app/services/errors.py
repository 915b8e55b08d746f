"""Exception hierarchy shared by every engine module."""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class EngineError(Exception):
    """Base error; carries the exit code the CLI reports for it."""

    exit_code = EXIT_RUNTIME
    default_module = "engine"

    def __init__(
        self,
        detail: str,
        *,
        module: str | None = None,
        iteration: int | None = None,
    ) -> None:
        self.detail = detail
        self.module = module or self.default_module
        self.iteration = iteration
        super().__init__(detail)

    def __str__(self) -> str:
        where = self.module
        if self.iteration is not None:
            where = f"{where} @ iteration {self.iteration}"
        return f"[{where}] {self.detail}"


class ConfigError(EngineError):
    exit_code = EXIT_CONFIG
    default_module = "cli-io"


class DatasetValidationError(EngineError):
    """Raised with every violation found, not just the first."""

    default_module = "core-model"

    def __init__(self, errors: list[str]) -> None:
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InvalidParameterError(EngineError):
    default_module = "distributions"


class NotPositiveDefiniteError(EngineError):
    default_module = "distributions"

    def __init__(self, what: str, min_eigenvalue: float, *, module: str | None = None) -> None:
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"{what} is not positive definite (min eigenvalue {self.min_eigenvalue:.3e})",
            module=module,
        )


class MalformedCorrelationError(EngineError):
    default_module = "copula"


class IncompatibleCorrelationError(EngineError):
    default_module = "copula"


class OutcomeModelDegenerateError(EngineError):
    default_module = "outcome-dpm"

    def __init__(self, n_units: int, dim: int) -> None:
        self.n_units = n_units
        self.dim = dim
        super().__init__(
            f"singular sample covariance for the outcome model: {n_units} units, dimension {dim}"
        )


class ZeroPredictiveDensityError(EngineError):
    default_module = "diagnostics"

    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"predictive density is zero at data index {index}")


class RankDeficientDesignError(EngineError):
    default_module = "simulation"


class StorageError(EngineError):
    default_module = "cli-io"


class ArtifactNotFoundError(StorageError):
    pass


class InvalidArtifactNameError(StorageError):
    pass


class ArchiveFormatError(StorageError):
    pass
