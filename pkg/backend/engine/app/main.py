"""Command-line entry point: ``python -m app.main <subcommand> ...`` from ``backend/engine``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

import numpy as np
from pydantic import ValidationError

from .config import settings
from .services.analysis import (
    AnalysisRun,
    ExportFormat,
    diagnose_stage,
    effects_stage,
    export_results,
    fit_stage,
    load_config,
    load_draws,
    run_stages,
    sensitivity_stage,
    stamp,
    with_overrides,
)
from .services.errors import EXIT_OK, EXIT_RUNTIME, ConfigError, EngineError
from .services.model import ChainConfig, HyperpriorVariant, PriorMode
from .services.simulation import (
    CorrelationCase,
    HarnessConfig,
    InteractionCase,
    harness_chain_config,
    replication_harness,
)
from .services.storage import create_store

logger = logging.getLogger("app")

TREATMENT_MECHANISM = "Bernoulli(0.5), independent of covariates"

# Flag name -> ChainConfig field, for the chain overrides shared by analysis subcommands.
CHAIN_FLAGS = {
    "n_iter": int,
    "n_burn": int,
    "thin": int,
    "k_max": int,
    "seed": int,
    "dissociative_multiplier": float,
    "associative_multiplier": float,
    "outcome_truncation": int,
    "imputation_step_scale": float,
    "log_every": int,
}


def _add_chain_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("chain overrides")
    for field, kind in CHAIN_FLAGS.items():
        group.add_argument(f"--{field.replace('_', '-')}", dest=field, type=kind)
    group.add_argument("--prior-mode", choices=[m.value for m in PriorMode])
    group.add_argument("--hyperprior-variant", choices=[v.value for v in HyperpriorVariant])


def _analysis_parser(subparsers, name: str, help_text: str) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(name, help=help_text)
    parser.add_argument("config", help="analysis config file (TOML)")
    parser.add_argument("--output", help="artifact directory, or key prefix on S3")
    parser.add_argument("--workers", type=int, help="defaults to ENGINE_THREADS")
    _add_chain_flags(parser)
    return parser


def _open_run(args: argparse.Namespace) -> AnalysisRun:
    overrides = {field: getattr(args, field) for field in CHAIN_FLAGS}
    overrides["prior_mode"] = args.prior_mode
    overrides["hyperprior_variant"] = args.hyperprior_variant
    config = with_overrides(load_config(args.config), overrides, args.output)
    return AnalysisRun.open(config, workers=args.workers or settings.engine_threads)


def cmd_fit(args: argparse.Namespace) -> None:
    fit_stage(_open_run(args))


def cmd_effects(args: argparse.Namespace) -> None:
    run = _open_run(args)
    effects_stage(run, load_draws(run))


def cmd_sensitivity(args: argparse.Namespace) -> None:
    run = _open_run(args)
    sensitivity_stage(run, load_draws(run))


def cmd_diagnose(args: argparse.Namespace) -> None:
    run = _open_run(args)
    diagnose_stage(run, load_draws(run))


def cmd_run(args: argparse.Namespace) -> None:
    run_stages(
        _open_run(args),
        compare_priors=args.compare_priors,
        single_mediator=args.single_mediator,
    )


def cmd_export(args: argparse.Namespace) -> None:
    export_results(create_store(args.artifact_dir), args.format)


def _harness_config(args: argparse.Namespace) -> HarnessConfig:
    overrides = {"n_iter": args.n_iter, "n_burn": args.n_burn, "thin": args.thin}
    try:
        chain = ChainConfig(
            **{
                **harness_chain_config().model_dump(),
                **{key: value for key, value in overrides.items() if value is not None},
            }
        )
        return HarnessConfig(
            n_reps=args.reps,
            n=args.n,
            n_mc=args.n_mc,
            n_boot=args.n_boot,
            truth_draws=args.truth_draws,
            seed=args.seed,
            cross_world_correlation=args.cross_world,
            chain=chain,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid simulation settings: {exc}") from exc


def cmd_simulate(args: argparse.Namespace) -> None:
    config = _harness_config(args)
    corr_cases = [CorrelationCase(c) for c in args.corr_case or [c.value for c in CorrelationCase]]
    interaction_cases = [
        InteractionCase(c) for c in args.interaction_case or ["single", "double"]
    ]
    workers = args.workers or settings.engine_threads
    table = replication_harness(config, corr_cases, interaction_cases, workers)

    store = create_store(args.output)
    config_hash = config.config_hash()
    store.save_table("simulation.csv", stamp(table, config.seed, config_hash))
    store.save_json(
        "run_metadata.json",
        {
            "seed": config.seed,
            "config_hash": config_hash,
            "config": config.model_dump(mode="json"),
            "threads": workers,
            "treatment_assignment": TREATMENT_MECHANISM,
            "cross_world_correlation": config.cross_world_correlation,
            "scenario_labels": {
                f"{c.value}/{i.value}": f"{c.label}/{i.label}"
                for c in corr_cases
                for i in interaction_cases
            },
        },
    )
    logger.info("Wrote %s", store.location("simulation.csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copulamed",
        description="Bayesian nonparametric mediation analysis with multiple mediators.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, handler, help_text in (
        ("fit", cmd_fit, "run the chain and archive retained draws"),
        ("effects", cmd_effects, "mediation and principal effects from archived draws"),
        ("sensitivity", cmd_sensitivity, "exponential-tilt sensitivity grid"),
        ("diagnose", cmd_diagnose, "DIC3, trace summary and posterior predictive checks"),
    ):
        _analysis_parser(subparsers, name, help_text).set_defaults(handler=handler)

    run = _analysis_parser(subparsers, "run", "every stage in order")
    run.add_argument("--compare-priors", action="store_true")
    run.add_argument("--single-mediator", action="store_true")
    run.set_defaults(handler=cmd_run)

    export = subparsers.add_parser("export", help="reporting tables from a finished run")
    export.add_argument("artifact_dir")
    export.add_argument(
        "--format", choices=[f.value for f in ExportFormat], default=ExportFormat.CSV.value
    )
    export.set_defaults(handler=cmd_export)

    simulate = subparsers.add_parser("simulate", help="bias/MSE replication study")
    simulate.add_argument("--reps", type=int, default=25, help="400 for the full study")
    simulate.add_argument("--n", type=int, default=500)
    simulate.add_argument("--n-mc", type=int, default=20)
    simulate.add_argument("--n-boot", type=int, default=1000)
    simulate.add_argument("--truth-draws", type=int, default=1_000_000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--cross-world", type=float, default=0.0)
    simulate.add_argument(
        "--corr-case", action="append", choices=[c.value for c in CorrelationCase]
    )
    simulate.add_argument(
        "--interaction-case", action="append", choices=[c.value for c in InteractionCase]
    )
    simulate.add_argument("--n-iter", type=int)
    simulate.add_argument("--n-burn", type=int)
    simulate.add_argument("--thin", type=int)
    simulate.add_argument("--output", default="simulation")
    simulate.add_argument("--workers", type=int)
    simulate.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.handler(args)
    except EngineError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except (np.linalg.LinAlgError, ValueError) as exc:
        logger.error("runtime failure: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
