"""Seeded counter-based random streams.

All randomness goes through Philox generators keyed by a ``SeedSequence`` whose
spawn key names the stream.  A stream is identified by ``(seed, name, index)``,
so the draws for record ``i`` never depend on how many other records were
simulated or in which order.
"""

from __future__ import annotations

import zlib

import numpy as np

STREAMS = {
    "state": 1,
    "design": 2,
    "shots": 3,
    "packing": 4,
    "spread": 5,
    "check": 6,
    "bootstrap": 7,
}


def stream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Philox generator for the named stream (``index`` selects a substream)."""
    if name in STREAMS:
        tag = STREAMS[name]
    else:
        tag = 1000 + zlib.crc32(name.encode()) % 100000
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(tag, *map(int, index)))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed, name: str = "state") -> np.random.Generator:
    """Accept an int seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return stream(seed, name)
