"""Seeded, replayable random streams.

Every stochastic routine in the engine takes a ``numpy.random.Generator``;
``RngStream`` is where those generators come from. Streams are addressed by
``(seed, stream_id)``: the same address always yields the same sequence, and
distinct ids are independent through ``SeedSequence`` spawn keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Well-known stream ids, so that stages never share a sequence.
CHAIN_STREAM = 0
EFFECTS_STREAM = 1
PREDICTIVE_STREAM = 2
CEP_STREAM = 3
SIMULATION_STREAM = 4
BOOTSTRAP_STREAM = 5
PARAMETRIC_STREAM = 6

_WORD_MASK = (1 << 64) - 1


@dataclass(slots=True)
class RngStream:
    """PCG64 generator bound to a ``(seed, stream_id)`` address."""

    seed: int
    stream_id: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def child(self, *index: int) -> RngStream:
        """Independent sub-stream, e.g. one per draw or replication."""
        return RngStream(self.seed, self.stream_id + tuple(int(i) for i in index))

    def position(self) -> tuple[int, int, int, int]:
        """PCG64 state and increment as four 64-bit words."""
        state = self.generator.bit_generator.state["state"]
        return (
            state["state"] >> 64,
            state["state"] & _WORD_MASK,
            state["inc"] >> 64,
            state["inc"] & _WORD_MASK,
        )

    def restore(self, position: tuple[int, int, int, int]) -> None:
        """Rewind or fast-forward to a recorded position."""
        hi_state, lo_state, hi_inc, lo_inc = (int(word) for word in position)
        bit_state = self.generator.bit_generator.state
        bit_state["state"] = {
            "state": (hi_state << 64) | lo_state,
            "inc": (hi_inc << 64) | lo_inc,
        }
        bit_state["has_uint32"] = 0
        bit_state["uinteger"] = 0
        self.generator.bit_generator.state = bit_state
