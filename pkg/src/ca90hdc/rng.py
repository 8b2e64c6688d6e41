"""Deterministic random streams.

Every stream is a ``numpy.random.Generator`` over PCG64, keyed by a master
seed plus a tuple of tags (experiment name, trial index, ...). Streams with
different keys are statistically independent, and a given key always yields
the same stream regardless of how work is scheduled.
"""
from __future__ import annotations

import zlib

import numpy as np

ALGORITHM = "PCG64"


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError("integer tags must be non-negative")
        return int(tag)
    return zlib.crc32(str(tag).encode("utf-8"))


def stream(master_seed: int, *tags) -> np.random.Generator:
    """Generator for ``(master_seed, *tags)``."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(_tag_to_int(t) for t in tags))
    return np.random.Generator(np.random.PCG64(seq))
