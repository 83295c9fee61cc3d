"""Reproducible random streams.

Every experiment draws from a counter-based Philox generator keyed by the pair
(global seed, stream id), so trial t of a run always sees the same numbers no matter
which worker thread executes it or in which order.
"""
from __future__ import annotations

import numpy as np

from scanspectra.common.exceptions import DomainError

SEED_MASK = (1 << 64) - 1


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise DomainError(f"Seed and stream id must be non-negative (seed={seed}, stream={stream})")
    sequence = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))
