"""Seedable random streams.

Every logical actor of a simulation (source, Alice, Bob, Eve, ...) draws from
its own stream.  A stream is a PCG64 bit generator whose state is derived from
``(master_seed, stream_id)`` through numpy's ``SeedSequence`` hash, so adding
or removing an actor never shifts the draws of another.

Uniforms are built from the top 53 bits of a raw 64-bit word and coins from
the top bit, which makes the output independent of how draws are batched:
``s.uniforms(3)`` consumes exactly the same words as three ``s.uniform()``
calls.
"""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

_TWO_M53 = 2.0 ** -53

StreamId = Union[int, Sequence[int]]


class RngStream:
    """One independent pseudo-random stream."""

    def __init__(self, master_seed: int, stream_id: StreamId = 0):
        if isinstance(stream_id, (int, np.integer)):
            key = (int(stream_id),)
        else:
            key = tuple(int(i) for i in stream_id)
        if any(i < 0 for i in key):
            raise ValueError(f"stream id must be non-negative, got {stream_id!r}")
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = key
        seq = np.random.SeedSequence(self.master_seed, spawn_key=key)
        self._bitgen = np.random.PCG64(seq)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"

    def child(self, *path: int) -> RngStream:
        """Stream derived from this one's id extended by ``path``."""
        return RngStream(self.master_seed, self.stream_id + tuple(path))

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n)

    def uniform(self) -> float:
        return float(int(self._bitgen.random_raw()) >> 11) * _TWO_M53

    def uniforms(self, n: int) -> np.ndarray:
        return (self._bitgen.random_raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def coin(self) -> int:
        return int(self._bitgen.random_raw()) >> 63

    def coins(self, n: int) -> np.ndarray:
        return (self._bitgen.random_raw(n) >> np.uint64(63)).astype(np.int8)


def new_stream(master_seed: int, stream_id: StreamId = 0) -> RngStream:
    return RngStream(master_seed, stream_id)


def uniform(s: RngStream) -> float:
    return s.uniform()


def coin(s: RngStream) -> int:
    return s.coin()


# Actor and purpose ids.  A run's stream id is (sweep point, actor, purpose).
SOURCE, ALICE, BOB, EVE_A, EVE_B = 0, 1, 2, 3, 4
EMIT, SETTING, POLARIZER, CLOCK = 0, 1, 2, 3


class ActorStreams:
    """The streams one actor draws from, one per purpose.

    Keeping purposes apart means a run's draws do not depend on how events are
    batched, and a DP (which draws nothing at its polarizer) leaves the other
    streams exactly where a PP would.
    """

    def __init__(self, master_seed: int, actor: int, point: int = 0):
        base = RngStream(master_seed, (point, actor))
        self.emit = base.child(EMIT)
        self.setting = base.child(SETTING)
        self.polarizer = base.child(POLARIZER)
        self.clock = base.child(CLOCK)
