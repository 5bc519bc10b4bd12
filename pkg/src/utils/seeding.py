"""
Seed splitting for reproducible, independent random streams.

Every stream is a numpy PCG64 generator. A child seed is the first 64-bit
word of ``SeedSequence(entropy=master, spawn_key=keys)``, so it depends only
on the master seed and the key tuple, never on call order.
"""

import numpy as np

SPLIT_STREAM = 0x5E1EC7


def derive_seed(master_seed: int, *keys: int) -> int:
    """Return a 64-bit seed for the stream identified by ``keys``."""
    seq = np.random.SeedSequence(entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                 spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` (optionally split by ``keys``)."""
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                 spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))


