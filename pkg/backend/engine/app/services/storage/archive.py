"""Versioned little-endian archive of retained posterior draws (``draws.bin``).

Header::

    magic b"CPMDRAW\\0" | u16 version | u16 K | u16 P | u32 n | u16 K_max
    | u16 L | u32 draws | u8 prior mode | u64 seed | 32-byte config hash

Each draw then holds its iteration (u32) and RNG position (4 x u64), the 2K
marginals in arm-major order (intercepts, precisions and weights, K_max f8 each;
beta and covariate centre, P f8 each; mass, mu, S, a*, lower), the 2K x 2K
correlation and rho (NaN when unconstrained), the two outcome mixtures (weights,
means, covariances, alpha, k0, m1, psi1) and the n x 2K completed mediators.
"""

from __future__ import annotations

import math
import struct
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import ArchiveFormatError, InvalidParameterError
from ..model import CorrelationMatrix, MarginalParams, OutcomeParams, PosteriorDraw, PriorMode

MAGIC = b"CPMDRAW\0"
VERSION = 1
HEADER = struct.Struct("<8sHHHIHHIBQ32s")
DRAW_HEADER = struct.Struct("<I4Q")
PRIOR_CODES = {PriorMode.UNIFORM: 0, PriorMode.RHO_CONSTRAINED: 1}
HASH_BYTES = 32


@dataclass(frozen=True, slots=True, eq=False)
class DrawArchive:
    draws: list[PosteriorDraw]
    seed: int
    config_hash: str
    prior_mode: PriorMode


def _floats(values: object) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def _hash_bytes(config_hash: str) -> bytes:
    raw = bytes.fromhex(config_hash) if config_hash else b""
    if len(raw) > HASH_BYTES:
        raise InvalidParameterError("config hash must fit in 32 bytes")
    return raw.ljust(HASH_BYTES, b"\0")


def encode_draws(
    draws: Sequence[PosteriorDraw], *, seed: int, config_hash: str, prior_mode: PriorMode
) -> bytes:
    if not draws:
        raise InvalidParameterError("an archive needs at least one draw")
    first = draws[0]
    k = first.n_mediators
    p = first.marginals[0].n_covariates
    n = first.mediators.shape[0]
    k_max = first.marginals[0].k_max
    truncation = first.outcomes[0].truncation
    parts = [
        HEADER.pack(
            MAGIC,
            VERSION,
            k,
            p,
            n,
            k_max,
            truncation,
            len(draws),
            PRIOR_CODES[prior_mode],
            seed,
            _hash_bytes(config_hash),
        )
    ]
    for draw in draws:
        parts.append(DRAW_HEADER.pack(draw.iteration, *draw.rng_position))
        for params in draw.marginals:
            if params.k_max != k_max or params.n_covariates != p:
                raise InvalidParameterError("all marginals must share K_max and P")
            parts.append(
                _floats(
                    np.concatenate(
                        [
                            params.intercepts,
                            params.precisions,
                            params.weights,
                            params.beta,
                            params.x_center,
                            [params.mass, params.mu, params.s, params.a_star, params.lower],
                        ]
                    )
                )
            )
        rho = draw.correlation.rho
        parts.append(_floats(draw.correlation.values))
        parts.append(_floats([math.nan if rho is None else rho]))
        for outcome in draw.outcomes:
            if outcome.truncation != truncation:
                raise InvalidParameterError("both outcome mixtures must share the truncation")
            parts.append(_floats(outcome.weights))
            parts.append(_floats(outcome.means))
            parts.append(_floats(outcome.covs))
            parts.append(_floats([outcome.alpha, outcome.k0]))
            parts.append(_floats(outcome.m1))
            parts.append(_floats(outcome.psi1))
        parts.append(_floats(draw.mediators))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def unpack(self, layout: struct.Struct) -> tuple:
        if self.offset + layout.size > len(self.data):
            raise ArchiveFormatError("draw archive is truncated")
        values = layout.unpack_from(self.data, self.offset)
        self.offset += layout.size
        return values

    def floats(self, *shape: int) -> NDArray:
        count = math.prod(shape)
        if self.offset + 8 * count > len(self.data):
            raise ArchiveFormatError("draw archive is truncated")
        values = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.offset)
        self.offset += 8 * count
        return values.astype(float).reshape(shape)


def decode_draws(data: bytes) -> DrawArchive:
    """Inverse of ``encode_draws``; floats come back bit for bit."""
    reader = _Reader(data)
    magic, version, k, p, n, k_max, truncation, count, prior_code, seed, raw_hash = reader.unpack(
        HEADER
    )
    if magic != MAGIC:
        raise ArchiveFormatError("not a draw archive (bad magic)")
    if version != VERSION:
        raise ArchiveFormatError(f"unsupported draw archive version {version}")
    modes = {code: mode for mode, code in PRIOR_CODES.items()}
    if prior_code not in modes:
        raise ArchiveFormatError(f"unknown prior mode code {prior_code}")
    prior_mode = modes[prior_code]
    dim = 2 * k
    outcome_dim = 1 + dim + p

    draws = []
    for _ in range(count):
        iteration, *position = reader.unpack(DRAW_HEADER)
        marginals = []
        for _ in range(dim):
            block = reader.floats(3 * k_max + 2 * p + 5)
            splits = np.cumsum([k_max, k_max, k_max, p, p])
            intercepts, precisions, weights, beta, x_center, scalars = np.split(block, splits)
            mass, mu, s, a_star, lower = scalars
            marginals.append(
                MarginalParams(
                    intercepts, precisions, weights, beta, x_center, mass, mu, s, a_star, lower
                )
            )
        corr_values = reader.floats(dim, dim)
        rho = float(reader.floats(1)[0])
        if math.isnan(rho):
            correlation = CorrelationMatrix(corr_values)
        else:
            correlation = CorrelationMatrix(corr_values, prior_mode, rho)
        outcomes = []
        for _ in range(2):
            weights = reader.floats(truncation)
            means = reader.floats(truncation, outcome_dim)
            covs = reader.floats(truncation, outcome_dim, outcome_dim)
            alpha, k0 = reader.floats(2)
            m1 = reader.floats(outcome_dim)
            psi1 = reader.floats(outcome_dim, outcome_dim)
            outcomes.append(OutcomeParams(weights, means, covs, alpha, k0, m1, psi1))
        mediators = reader.floats(n, dim)
        draws.append(
            PosteriorDraw(
                iteration=iteration,
                rng_position=tuple(position),
                marginals=tuple(marginals),
                correlation=correlation,
                outcomes=tuple(outcomes),
                mediators=mediators,
            )
        )
    if reader.offset != len(data):
        raise ArchiveFormatError("trailing bytes after the last draw")
    config_hash = raw_hash.hex() if any(raw_hash) else ""
    return DrawArchive(draws, seed, config_hash, prior_mode)
