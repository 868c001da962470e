"""Counter-based seed derivation.

Every stochastic component draws from a stream keyed by
``(master_seed, *keys)``.  Keys may be ints or strings; strings are hashed
with CRC32 so the mapping is stable across processes and Python versions.
Adding new keys never changes the streams of existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"unsupported seed key type: {type(key).__name__}")


def derive_seed(master_seed: int, *keys) -> int:
    """Return a 63-bit integer seed for the stream named by ``keys``."""
    ss = np.random.SeedSequence(
        entropy=_key_to_int(master_seed), spawn_key=tuple(_key_to_int(k) for k in keys)
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def derive_rng(master_seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *keys))
