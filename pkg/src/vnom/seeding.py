"""Seed discipline for all randomized operations.

Every randomized function takes a seed that is either a non-negative int or a
``numpy.random.SeedSequence``.  Derived streams (per replicate, per sweep
cell, per screening block) are obtained by extending the seed's spawn key
with integer coordinates, so results are independent of execution order and
worker count.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Normalize an int (or SeedSequence) into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise InputError("seed must be a non-negative integer")
        return np.random.SeedSequence(int(seed))
    raise InputError(f"seed must be an int or SeedSequence, got {type(seed).__name__}")


def child_seed(seed, *key: int) -> np.random.SeedSequence:
    """Derive a child seed keyed by integer coordinates.

    Pure function of (seed, key): unlike ``SeedSequence.spawn`` it does not
    mutate the parent, so any worker can derive any child independently.
    """
    base = as_seed_sequence(seed)
    spawn_key = tuple(base.spawn_key) + tuple(int(k) for k in key)
    return np.random.SeedSequence(entropy=base.entropy, spawn_key=spawn_key)


def generator(seed) -> np.random.Generator:
    """A fresh PCG64 generator for the given seed."""
    return np.random.default_rng(as_seed_sequence(seed))
