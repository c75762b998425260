"""Deterministic random streams keyed by (seed, instance, purpose)."""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def make_rng(seed: int, *keys) -> np.random.Generator:
    """Counter-based Philox stream; independent of call order."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
