"""Seeded random generation.

All randomness flows through Philox (counter-based) generators so runs are
bit-reproducible from an integer seed and substreams can be derived without
overlap.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed) -> np.random.Generator:
    """Generator for a seed, which may be an int or a tuple of ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """n independent substreams derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]
