"""Named, order-independent random sub-streams.

Every random object is drawn from a generator keyed by
``(seed, trial, slot, tag)``, so a trial produces the same draws no matter
which worker runs it or in what order.
"""
from __future__ import annotations

import zlib

import numpy as np

# spawn_key entries must be non-negative; shared objects use this trial id
SHARED = 2**32 - 1


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, trial: int = 0, slot: int = 0, tag: str = "") -> np.random.Generator:
    """Return the generator for one ``(seed, trial, slot, tag)`` key."""
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=(int(trial), int(slot), tag_id(tag)))
    return np.random.Generator(np.random.PCG64(ss))
