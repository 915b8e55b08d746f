"""Convergence summaries of global-parameter traces."""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

FLAG_OK = "ok"
FLAG_CONSTANT = "constant"
FLAG_LOW_ESS = "low_ess"
LOW_ESS_FRACTION = 0.1


def autocovariance(values: ArrayLike) -> NDArray:
    """Biased sample autocovariance at every lag, via zero-padded FFT."""
    values = np.asarray(values, dtype=float).reshape(-1)
    n = values.size
    centred = values - values.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, size)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), size)[:n] / n


def effective_sample_size(values: ArrayLike) -> float:
    """ESS from the initial monotone positive sequence of paired autocorrelations."""
    values = np.asarray(values, dtype=float).reshape(-1)
    n = values.size
    if n < 2:
        return float(n)
    acov = autocovariance(values)
    if acov[0] <= 0:
        return float(n)
    rho = acov / acov[0]
    pairs = rho[: n - n % 2].reshape(-1, 2).sum(axis=1)
    total = 0.0
    previous = np.inf
    for gamma in pairs:
        if gamma <= 0:
            break
        gamma = min(gamma, previous)
        total += gamma
        previous = gamma
    tau = max(-1.0 + 2.0 * total, 1.0 / np.log10(max(n, 10)))
    return float(n / tau)


def lag1_autocorrelation(values: ArrayLike) -> float:
    """Lag-1 cross product over n - 1 pairs divided by the variance over n points.

    An alternating +1/-1 chain of even length gives exactly -1.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    n = values.size
    if n < 2:
        return 0.0
    centred = values - values.mean()
    variance = float(centred @ centred) / n
    if variance <= 0:
        return 0.0
    lagged = float(centred[:-1] @ centred[1:]) / (n - 1)
    return float(np.clip(lagged / variance, -1.0, 1.0))


def trace_summary(trace: pd.DataFrame) -> pd.DataFrame:
    """Mean, s.d., lag-1 autocorrelation, ESS and a flag for every traced parameter."""
    rows = []
    for name in trace.columns:
        if name == "iteration":
            continue
        values = trace[name].dropna().to_numpy(dtype=float)
        n = values.size
        constant = n == 0 or np.ptp(values) == 0
        ess = effective_sample_size(values)
        if constant:
            flag = FLAG_CONSTANT
        elif ess < LOW_ESS_FRACTION * n:
            flag = FLAG_LOW_ESS
        else:
            flag = FLAG_OK
        rows.append(
            {
                "parameter": name,
                "n": n,
                "mean": float(values.mean()) if n else np.nan,
                "sd": float(values.std(ddof=1)) if n > 1 else 0.0,
                "lag1": 0.0 if constant else lag1_autocorrelation(values),
                "ess": ess,
                "flag": flag,
            }
        )
    summary = pd.DataFrame(rows, columns=["parameter", "n", "mean", "sd", "lag1", "ess", "flag"])
    flagged = summary[summary["flag"] == FLAG_LOW_ESS]
    if not flagged.empty:
        logger.warning(
            "%d traced parameters have ESS below %.0f%% of the retained draws: %s",
            len(flagged),
            100 * LOW_ESS_FRACTION,
            ", ".join(flagged["parameter"]),
        )
    return summary
