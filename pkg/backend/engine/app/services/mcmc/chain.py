"""Metropolis-within-Gibbs driver: Steps 1-4 per iteration, in order."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from ..distributions import CHAIN_STREAM, RngStream
from ..errors import EngineError
from ..model import (
    ChainConfig,
    CorrelationMatrix,
    Dataset,
    MarginalParams,
    PosteriorDraw,
    PotentialMediatorState,
)
from .acceptance import BLOCKS, AcceptanceCounter
from .copula import init_correlation, step2_sample_R
from .imputation import check_imputation_rate, initial_potential_state, step3_impute
from .marginal import (
    MarginalHypers,
    MarginalState,
    check_truncation,
    init_marginal_state,
    latent_column,
    step1_sweep,
)
from .outcome import (
    OutcomeDpmState,
    OutcomeRegression,
    check_outcome_truncation,
    init_outcome_state,
    step4_sweep,
)

logger = logging.getLogger(__name__)


def coordinate_labels(dataset: Dataset) -> list[str]:
    return [f"{name}({arm})" for arm in (0, 1) for name in dataset.mediator_names]


@dataclass(slots=True)
class ChainResult:
    """Retained draws of one chain with its acceptance tallies and global-parameter trace."""

    draws: list[PosteriorDraw]
    acceptance: AcceptanceCounter
    trace: pd.DataFrame
    config: ChainConfig
    labels: list[str] = field(default_factory=list)

    @property
    def n_draws(self) -> int:
        return len(self.draws)

    def acceptance_table(self) -> pd.DataFrame:
        rows = []
        for block in BLOCKS:
            accepted, proposed = self.acceptance.counts.get(block, (0, 0))
            rows.append(
                {
                    "block": block,
                    "accepted": accepted,
                    "proposed": proposed,
                    "rate": self.acceptance.rate(block),
                }
            )
        return pd.DataFrame(rows)


def _outcome_rows(y: np.ndarray, t: np.ndarray, x: np.ndarray, units: np.ndarray) -> np.ndarray:
    return np.column_stack([y[units], t[units], x[units]])


def _trace_row(
    iteration: int,
    marginals: list[MarginalParams],
    r: CorrelationMatrix,
    outcomes: list[OutcomeDpmState],
    labels: list[str],
    covariate_names: tuple[str, ...],
) -> dict[str, float]:
    row: dict[str, float] = {"iteration": iteration}
    for label, params in zip(labels, marginals, strict=True):
        for name, value in zip(covariate_names, params.beta, strict=True):
            row[f"beta[{label},{name}]"] = float(value)
        row[f"mass[{label}]"] = params.mass
    k = r.n_mediators
    for arm in (0, 1):
        block = r.within(arm)
        for j, i in zip(*np.triu_indices(k, k=1), strict=True):
            row[f"r{arm}[{j + 1},{i + 1}]"] = float(block[j, i])
    if r.rho is not None:
        row["rho"] = r.rho
    for arm, state in enumerate(outcomes):
        row[f"alpha[{arm}]"] = state.alpha
    return row


def run_chain(dataset: Dataset, config: ChainConfig) -> ChainResult:
    """Fit the full model and keep every ``thin``-th post-burn-in state.

    Raises:
        EngineError: any module failure, tagged with the iteration it happened at.
    """
    stream = RngStream(config.seed, (CHAIN_STREAM,))
    rng = stream.generator
    n, k = dataset.n, dataset.k
    dim = 2 * k
    x, y, z = dataset.x, dataset.y, dataset.z
    labels = coordinate_labels(dataset)
    acceptance = AcceptanceCounter()

    t, mask = initial_potential_state(dataset.m, z, rng)
    hypers = [
        MarginalHypers.from_observed(t[mask[:, j], j], dataset.lower_bound, config)
        for j in range(dim)
    ]
    states: list[MarginalState] = [
        init_marginal_state(t[:, j], x, np.flatnonzero(mask[:, j]), hypers[j], config.k_max)
        for j in range(dim)
    ]
    h = np.column_stack([latent_column(s.params(), t[:, j], x) for j, s in enumerate(states)])
    potential = PotentialMediatorState(t, h, mask)
    r = init_correlation(config.prior_mode, k)
    arm_units = [dataset.arm(0), dataset.arm(1)]
    outcome_states = [
        init_outcome_state(_outcome_rows(y, t, x, units), config.outcome_truncation, rng)
        for units in arm_units
    ]
    step_sd = config.imputation_step_scale * np.sqrt([hp.sample_var for hp in hypers])

    draws: list[PosteriorDraw] = []
    trace_rows: list[dict[str, float]] = []
    weight_sums = np.zeros((dim, config.k_max))
    outcome_weight_sums = np.zeros((2, config.outcome_truncation))
    logger.info(
        "Starting chain: n=%d K=%d P=%d iterations=%d burn=%d thin=%d prior=%s",
        n,
        k,
        dataset.p,
        config.n_iter,
        config.n_burn,
        config.thin,
        config.prior_mode.value,
    )

    for iteration in range(1, config.n_iter + 1):
        try:
            t, h = potential.t.copy(), potential.h.copy()
            for j in range(dim):
                states[j] = step1_sweep(states[j], t[:, j], x, np.delete(h, j, axis=1), r, j, rng)
                h[:, j] = latent_column(states[j].params(), t[:, j], x)
            potential = PotentialMediatorState(t, h, mask)

            r = step2_sample_R(r, h, rng, acceptance)

            marginals = [s.params() for s in states]
            regressions = [OutcomeRegression(s.params()) for s in outcome_states]
            potential = step3_impute(
                potential, marginals, r, regressions, y, x, z, step_sd, rng, acceptance
            )

            for arm, units in enumerate(arm_units):
                rows = _outcome_rows(y, potential.t, x, units)
                outcome_states[arm] = step4_sweep(outcome_states[arm], rows, rng, acceptance)
        except EngineError as exc:
            if exc.iteration is None:
                exc.iteration = iteration
            raise
        except np.linalg.LinAlgError as exc:
            raise EngineError(str(exc), module="mcmc", iteration=iteration) from exc

        if config.is_retained(iteration):
            draws.append(
                PosteriorDraw(
                    iteration=iteration,
                    rng_position=stream.position(),
                    marginals=tuple(marginals),
                    correlation=r,
                    outcomes=tuple(s.params() for s in outcome_states),
                    mediators=potential.t,
                )
            )
            trace_rows.append(
                _trace_row(iteration, marginals, r, outcome_states, labels, dataset.covariate_names)
            )
            weight_sums += np.stack([m.weights for m in marginals])
            outcome_weight_sums += np.stack([s.weights for s in outcome_states])

        if iteration % config.log_every == 0:
            combined = acceptance.copy().merge(s.acceptance for s in states)
            rates = ", ".join(f"{block}={combined.rate(block):.2f}" for block in BLOCKS)
            logger.info("Iteration %d/%d, acceptance %s", iteration, config.n_iter, rates)

    for state in states:
        acceptance.merge([state.acceptance])
    if draws:
        for label, sums in zip(labels, weight_sums, strict=True):
            check_truncation(sums / len(draws), label)
        for arm, sums in enumerate(outcome_weight_sums):
            check_outcome_truncation(sums / len(draws), arm)
    check_imputation_rate(acceptance)
    logger.info("Chain finished: %d draws retained", len(draws))
    return ChainResult(
        draws=draws,
        acceptance=acceptance,
        trace=pd.DataFrame(trace_rows),
        config=config,
        labels=labels,
    )


def fit_marginal(
    values: ArrayLike,
    x: ArrayLike,
    lower: float,
    config: ChainConfig,
    rng: np.random.Generator,
) -> list[MarginalParams]:
    """Fit one DPM marginal on its own (identity copula); returns the retained draws."""
    values = np.asarray(values, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(values.size, -1)
    hypers = MarginalHypers.from_observed(values, lower, config)
    state = init_marginal_state(values, x, np.arange(values.size), hypers, config.k_max)
    identity = np.eye(1)
    no_others = np.zeros((values.size, 0))
    retained = []
    for iteration in range(1, config.n_iter + 1):
        state = step1_sweep(state, values, x, no_others, identity, 0, rng)
        if config.is_retained(iteration):
            retained.append(state.params())
    return retained
