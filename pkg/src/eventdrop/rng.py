"""Deterministic, splittable random state.

A 64-bit seed fully determines the draw sequence on every platform
(numpy PCG64).  Child states are derived by hashing the parent seed with
the child index, so splitting is independent of how many draws the parent
has consumed and plain 64-bit child seeds can be logged and replayed.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1


def _hash64(*parts: bytes) -> int:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return int.from_bytes(h.digest()[:8], "little")


@dataclass
class RngState:
    """Seeded generator wrapper; the seed is kept for logging and replay."""

    seed: int
    generator: np.random.Generator = field(repr=False)

    @classmethod
    def from_seed(cls, seed: int) -> "RngState":
        seed &= MASK64
        return cls(seed, np.random.Generator(np.random.PCG64(seed)))

    def split(self, n: int) -> list["RngState"]:
        """n independent child states; deterministic, no draws consumed."""
        return [
            RngState.from_seed(_hash64(struct.pack("<QQ", self.seed, i), b"split"))
            for i in range(n)
        ]


def derive_seed(master: int, sample_path: str, k: int) -> int:
    """Collision-resistant 64-bit child seed for (master, path, k)."""
    return _hash64(
        struct.pack("<Q", master & MASK64),
        sample_path.encode("utf-8"), b"\x00",
        struct.pack("<q", k),
    )


def derive_rng(master: int, sample_path: str, k: int) -> RngState:
    return RngState.from_seed(derive_seed(master, sample_path, k))
