"""Deterministic seed derivation.

Every stochastic stage owns a child seed derived from the master seed and a
label path, so results never depend on execution order or scheduling. String
labels are folded through crc32 to keep the derivation stable across runs
and platforms.
"""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(master: int, *path: int | str) -> int:
    """Derive a 64-bit child seed from a master seed and a label path."""
    spawn = tuple(
        p if isinstance(p, int) else zlib.crc32(p.encode("utf-8")) for p in path
    )
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=spawn)
    return int(ss.generate_state(1, np.uint64)[0])


def rng_from(master: int, *path: int | str) -> np.random.Generator:
    """Generator seeded by `derive_seed(master, *path)`."""
    return np.random.default_rng(derive_seed(master, *path))
