"""Deterministic random streams.

Every stream is derived from a master seed plus an integer key path, so the
numbers a given path sees never depend on how work is split across workers.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def fingerprint(seed: int, *parts) -> str:
    text = "|".join([str(int(seed))] + [repr(p) for p in parts])
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
