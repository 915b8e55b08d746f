"""Metropolis-Hastings acceptance bookkeeping."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

# Blocks reported by the trace summary, in display order.
BLOCKS = ("1b", "1c", "1d", "1e", "step2", "step3", "step4")


def acceptance_probability(log_ratio: float) -> float:
    if np.isnan(log_ratio):
        return 0.0
    return float(np.exp(min(0.0, log_ratio)))


def accept(rng: np.random.Generator, log_ratio: float) -> bool:
    """min(1, exp(log_ratio)) acceptance; NaN ratios reject."""
    if not np.isfinite(log_ratio):
        return bool(log_ratio == np.inf)
    return bool(np.log(rng.uniform()) < log_ratio)


@dataclass(slots=True)
class AcceptanceCounter:
    """Accepted/proposed tallies per MH block."""

    counts: dict[str, list[int]] = field(default_factory=dict)

    def record(self, block: str, accepted: int, proposed: int = 1) -> None:
        tally = self.counts.setdefault(block, [0, 0])
        tally[0] += int(accepted)
        tally[1] += int(proposed)

    def merge(self, others: Iterable[AcceptanceCounter]) -> AcceptanceCounter:
        for other in others:
            for block, (accepted, proposed) in other.counts.items():
                self.record(block, accepted, proposed)
        return self

    def rate(self, block: str) -> float:
        accepted, proposed = self.counts.get(block, (0, 0))
        return accepted / proposed if proposed else float("nan")

    def copy(self) -> AcceptanceCounter:
        return AcceptanceCounter({block: list(tally) for block, tally in self.counts.items()})
