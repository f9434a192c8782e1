"""Reproducible, splittable random streams.

Every stream is keyed by ``(master_seed, lane_index)`` and backed by a
counter-based Philox generator, so deriving lane ``n`` costs the same as
deriving lane ``0`` and distinct lanes never overlap.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 0

_U64 = (1 << 64) - 1


class Stream:
    """A single-owner source of uniform variates.

    Do not share one instance between threads; derive one stream per lane
    instead.
    """

    __slots__ = ("master_seed", "lane_index", "_gen")

    def __init__(self, master_seed: int, lane_index: int):
        if lane_index < 0:
            raise ValueError("lane_index must be nonnegative")
        self.master_seed = int(master_seed) & _U64
        self.lane_index = int(lane_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.lane_index,))
        self._gen = np.random.Generator(np.random.Philox(seq))

    @property
    def origin(self) -> tuple[int, int]:
        return self.master_seed, self.lane_index

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator (advances this stream)."""
        return self._gen

    def next_uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniform variates in [0, 1), in stream order."""
        return self._gen.random(n)

    def __repr__(self) -> str:
        return f"Stream(master_seed={self.master_seed}, lane_index={self.lane_index})"


def derive_stream(master_seed: int, lane_index: int = 0) -> Stream:
    return Stream(master_seed, lane_index)


def next_uniform(stream: Stream) -> float:
    return stream.next_uniform()
