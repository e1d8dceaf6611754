"""
Splittable seeded random streams.

A stream is a counter-based Philox generator keyed by (master_seed, stream_index, *subkeys),
so replicate i draws the same numbers regardless of which worker runs it or in what order.
"""

from dataclasses import dataclass
import os
from typing import Optional

import numpy as np

from scorelab.errors import SpecificationError

_U64 = 2 ** 64


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) < _U64):
            raise SpecificationError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.stream_index) < 0:
            raise SpecificationError(f"stream_index must be non-negative, got {self.stream_index}")

    def generator(self, *subkeys: int) -> np.random.Generator:
        keys = (int(self.stream_index),) + tuple(int(k) for k in subkeys)
        seq = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=keys)
        return np.random.Generator(np.random.Philox(seq))

    def stream(self, index: int) -> "SeedSpec":
        """Sibling spec on another stream index, same master seed."""
        return SeedSpec(self.master_seed, int(index))

    @classmethod
    def from_env(cls, stream_index: int = 0, var: str = "SCORELAB_SEED") -> Optional["SeedSpec"]:
        raw = os.getenv(var, "").strip()
        if not raw:
            return None
        try:
            return cls(int(raw), stream_index)
        except ValueError:
            raise SpecificationError(f"{var} must be an integer, got {raw!r}")
