"""Analysis stages: fit, effects, sensitivity and diagnostics, writing stamped artifacts."""

from __future__ import annotations

import logging
import platform
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Any

import pandas as pd

from ..diagnostics import dic_table, posterior_predictive, replicate_draw_indices, trace_summary
from ..distributions import CEP_STREAM, RngStream
from ..effects import EffectSummary, cep_surface, default_grid, posterior_effects
from ..errors import ConfigError
from ..mcmc import ChainResult, run_chain
from ..model import Dataset, PosteriorDraw, PriorMode
from ..sensitivity import SensitivityResult, sensitivity_effects
from ..storage import ArtifactStore, create_store, decode_draws, encode_draws
from .dataset import load_dataset
from .run_config import AnalysisConfig, load_config

logger = logging.getLogger(__name__)

ARCHIVE_NAME = "draws.bin"
METADATA_NAME = "run_metadata.json"
STAMP_COLUMNS = ("run_seed", "config_hash")
PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "pydantic-settings", "boto3")

# Fixed modelling rules recorded with every run.
SIGMA_HAT_RULE = "sd of M(1)-M(0) pooled over units and retained draws"
TILT_RULE = "tilt applied to the conditional outcome mixture; effects use its mean"
NIE_STAR_RULE = "arm-0 outcome regression with one mediator switched from the control world"


def stamp(table: pd.DataFrame, seed: int, config_hash: str) -> pd.DataFrame:
    stamped = table.copy()
    stamped["run_seed"] = seed
    stamped["config_hash"] = config_hash
    return stamped


def unstamp(table: pd.DataFrame) -> pd.DataFrame:
    return table.drop(columns=[c for c in STAMP_COLUMNS if c in table.columns])


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


@dataclass(slots=True)
class AnalysisRun:
    """One configured analysis bound to its dataset and artifact store."""

    config: AnalysisConfig
    dataset: Dataset
    store: ArtifactStore
    config_hash: str
    workers: int = 1

    @classmethod
    def open(
        cls,
        config: AnalysisConfig,
        store: ArtifactStore | None = None,
        workers: int | None = None,
    ) -> AnalysisRun:
        dataset = load_dataset(config.data.path, config.data.columns)
        store = store or create_store(config.output.dir)
        workers = workers or config.effects.effect_workers or 1
        return cls(config, dataset, store, config.config_hash(), workers)

    @property
    def seed(self) -> int:
        return self.config.seed

    def save_table(self, name: str, table: pd.DataFrame) -> str:
        location = self.store.save_table(name, stamp(table, self.seed, self.config_hash))
        logger.info("Wrote %s (%d rows)", location, len(table))
        return location

    def record(self, stage: str, details: dict[str, Any] | None = None) -> None:
        """Merge this stage into ``run_metadata.json``."""
        current = self.store.load_json(METADATA_NAME) if self.store.exists(METADATA_NAME) else {}
        chain = self.config.chain
        current.update(
            {
                "seed": self.seed,
                "config_hash": self.config_hash,
                "config": self.config.echo(),
                "versions": package_versions(),
                "threads": self.workers,
                "dataset": {"n": self.dataset.n, "k": self.dataset.k, "p": self.dataset.p},
                "switches": {
                    "prior_mode": chain.prior_mode.value,
                    "hyperprior_variant": chain.hyperprior_variant.value,
                    "n_mc": self.config.effects.n_mc,
                    "sigma_hat_pooling": SIGMA_HAT_RULE,
                    "tilt": TILT_RULE,
                    "nie_star": NIE_STAR_RULE if self.config.effects.nie_star else None,
                    "cross_world": "conditional independence of M(0) and M(1) given copula",
                },
            }
        )
        stages = current.setdefault("stages", {})
        stages[stage] = details or {}
        self.store.save_json(METADATA_NAME, current)


def fit_stage(run: AnalysisRun) -> ChainResult:
    """Run the chain; write ``draws.bin``, ``trace.csv`` and ``acceptance.csv``."""
    chain = run_chain(run.dataset, run.config.chain)
    run.store.save_bytes(
        ARCHIVE_NAME,
        encode_draws(
            chain.draws,
            seed=run.seed,
            config_hash=run.config_hash,
            prior_mode=run.config.chain.prior_mode,
        ),
    )
    run.save_table("trace.csv", chain.trace)
    run.save_table("acceptance.csv", chain.acceptance_table())
    run.record(
        "fit",
        {
            "n_draws": chain.n_draws,
            "acceptance": {b: chain.acceptance.rate(b) for b in chain.acceptance.counts},
        },
    )
    return chain


def load_draws(run: AnalysisRun) -> list[PosteriorDraw]:
    """Retained draws from the run's archive, checked against its dataset."""
    archive = decode_draws(run.store.load_bytes(ARCHIVE_NAME))
    if archive.config_hash != run.config_hash:
        logger.warning(
            "draws.bin was written under config hash %s, current config hashes to %s",
            archive.config_hash[:12],
            run.config_hash[:12],
        )
    shape = archive.draws[0].mediators.shape
    if shape != (run.dataset.n, 2 * run.dataset.k):
        raise ConfigError(
            f"draws.bin holds {shape[0]} units x {shape[1]} coordinates, "
            f"dataset has {run.dataset.n} x {2 * run.dataset.k}"
        )
    logger.info("Loaded %d draws from %s", len(archive.draws), run.store.location(ARCHIVE_NAME))
    return archive.draws


def _posterior_effects(
    run: AnalysisRun, draws: list[PosteriorDraw], dataset: Dataset
) -> EffectSummary:
    effects = run.config.effects
    return posterior_effects(
        draws,
        dataset,
        n_mc=effects.n_mc,
        seed=run.seed,
        dissociative_multiplier=run.config.chain.dissociative_multiplier,
        associative_multiplier=run.config.chain.associative_multiplier,
        strata_pair=effects.strata_indices if dataset.k >= 2 else None,
        nie_star=effects.nie_star,
        workers=run.workers,
    )


def effects_stage(run: AnalysisRun, draws: list[PosteriorDraw]) -> EffectSummary:
    """Mediation and principal effects per draw and summarized, plus CEP surfaces."""
    effects = run.config.effects
    pair = effects.strata_pair
    if run.dataset.k >= 2 and pair is not None and max(pair) > run.dataset.k:
        raise ConfigError(f"strata_pair {effects.strata_pair} exceeds K={run.dataset.k}")
    summary = _posterior_effects(run, draws, run.dataset)
    run.save_table("effects.csv", summary.mediation_draws)
    run.save_table("effects_summary.csv", summary.mediation)
    run.save_table("principal.csv", summary.principal_draws)
    run.save_table("principal_summary.csv", summary.principal)
    if summary.strata_cross is not None:
        run.save_table("strata_cross.csv", summary.strata_cross)

    cep_draws = [draws[i] for i in replicate_draw_indices(len(draws), effects.cep_draws)]
    for k in range(run.dataset.k):
        rng = RngStream(run.seed, (CEP_STREAM, k)).generator
        grid = default_grid(run.dataset, k, effects.cep_grid_size)
        table, cloud = cep_surface(
            cep_draws, run.dataset, k, grid, effects.cep_mc, rng, effects.cep_max_units
        )
        run.save_table(f"cep_surface_{k + 1}.csv", table)
        run.save_table(f"cep_points_{k + 1}.csv", cloud)

    run.record(
        "effects",
        {
            "n_draws": len(draws),
            "sigma_hat": summary.sigma_hat.tolist(),
            "dissociative_threshold": list(summary.thresholds.dissociative),
            "associative_threshold": list(summary.thresholds.associative),
        },
    )
    return summary


def sensitivity_stage(run: AnalysisRun, draws: list[PosteriorDraw]) -> SensitivityResult | None:
    """Tilted effects over the configured grid; no artifacts when no grid is configured."""
    grid = run.config.chain.sensitivity
    if grid is None or not grid.epsilons:
        logger.info("No sensitivity grid configured; skipping")
        run.record("sensitivity", {"skipped": True})
        return None
    result = sensitivity_effects(
        draws,
        run.dataset,
        grid,
        n_mc=run.config.effects.n_mc,
        seed=run.seed,
        nie_star=run.config.effects.nie_star,
        workers=run.workers,
    )
    run.save_table("sensitivity.csv", result.summary)
    run.save_table("sensitivity_draws.csv", result.per_draw)
    run.save_table("chi_bounds.csv", result.bounds)
    run.record(
        "sensitivity",
        {
            "skipped": False,
            "y_star": result.y_star,
            "center": result.standardizer.center,
            "scale": result.standardizer.scale,
        },
    )
    return result


def diagnose_stage(
    run: AnalysisRun, draws: list[PosteriorDraw], trace: pd.DataFrame | None = None
) -> pd.DataFrame:
    """DIC3 per margin, trace summary and posterior predictive checks."""
    diagnostics = run.config.diagnostics
    dic = dic_table(
        draws, run.dataset, parametric_draws=diagnostics.parametric_draws, seed=run.seed
    )
    run.save_table("diagnostics.csv", dic)

    if trace is None and run.store.exists("trace.csv"):
        trace = unstamp(run.store.load_table("trace.csv"))
    if trace is not None:
        run.save_table("trace_summary.csv", trace_summary(trace))
    else:
        logger.warning("No trace.csv in %s; trace summary skipped", run.store.root)

    predictive = posterior_predictive(draws, run.dataset, diagnostics.n_rep, run.seed)
    run.save_table("predictive.csv", predictive.units)
    run.save_table("predictive_replicates.csv", predictive.replicates)
    run.record(
        "diagnose",
        {"coverage": dict(predictive.coverage().itertuples(index=False, name=None))},
    )
    return dic


def interval_widths(summaries: dict[PriorMode, pd.DataFrame]) -> pd.DataFrame:
    """Width of the 95% interval per estimand under each prior mode."""
    frames = []
    for mode, summary in summaries.items():
        frame = summary[["estimand", "mean", "q2.5", "q97.5"]].copy()
        frame.insert(1, "prior_mode", mode.value)
        frame["width"] = frame["q97.5"] - frame["q2.5"]
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def compare_priors_stage(
    run: AnalysisRun, draws: list[PosteriorDraw], summary: EffectSummary
) -> pd.DataFrame:
    """Refit under the other prior mode and compare interval widths."""
    current = run.config.chain.prior_mode
    other = PriorMode.UNIFORM if current == PriorMode.RHO_CONSTRAINED else PriorMode.RHO_CONSTRAINED
    other_chain = run_chain(run.dataset, run.config.chain.model_copy(update={"prior_mode": other}))
    other_summary = _posterior_effects(run, other_chain.draws, run.dataset)
    table = interval_widths({current: summary.mediation, other: other_summary.mediation})
    run.save_table("prior_comparison.csv", table)

    widths = table.pivot(index="estimand", columns="prior_mode", values="width")
    narrower = widths.index[
        widths[PriorMode.UNIFORM.value] < widths[PriorMode.RHO_CONSTRAINED.value]
    ]
    for estimand in narrower:
        logger.warning("Uniform-prior interval for %s is narrower than rho-constrained", estimand)
    logger.info(
        "Prior comparison: uniform at least as wide for %d of %d estimands",
        len(widths) - len(narrower),
        len(widths),
    )
    return table


def single_mediator_stage(run: AnalysisRun) -> dict[str, pd.DataFrame]:
    """One K=1 fit per mediator, written as ``effects_single_<name>.csv``."""
    tables = {}
    for k, name in enumerate(run.dataset.mediator_names):
        dataset = run.dataset.select_mediators([k])
        chain = run_chain(dataset, run.config.chain.model_copy(update={"sensitivity": None}))
        summary = _posterior_effects(run, chain.draws, dataset)
        tables[name] = summary.mediation
        run.save_table(f"effects_single_{name}.csv", summary.mediation)
    return tables


def run_stages(
    run: AnalysisRun, *, compare_priors: bool = False, single_mediator: bool = False
) -> AnalysisRun:
    """Every stage in order on an opened run."""
    logger.info(
        "Run %s: n=%d, K=%d into %s",
        run.config_hash[:12],
        run.dataset.n,
        run.dataset.k,
        run.store.root,
    )
    chain = fit_stage(run)
    summary = effects_stage(run, chain.draws)
    sensitivity_stage(run, chain.draws)
    diagnose_stage(run, chain.draws, chain.trace)
    if compare_priors:
        compare_priors_stage(run, chain.draws, summary)
    if single_mediator:
        single_mediator_stage(run)
    return run


def run_analysis(
    config_path: Path | str,
    *,
    compare_priors: bool = False,
    single_mediator: bool = False,
    workers: int | None = None,
    store: ArtifactStore | None = None,
) -> AnalysisRun:
    """Load a config file and run every stage; returns the run with its store."""
    run = AnalysisRun.open(load_config(config_path), store, workers)
    return run_stages(run, compare_priors=compare_priors, single_mediator=single_mediator)
