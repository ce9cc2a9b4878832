"""Deterministic seed splitting for path ensembles.

Path ``k`` of an ensemble with master seed ``m`` draws from a PCG64 stream
seeded with ``mix64((m + (k + 1) * GOLDEN) mod 2**64)``, where ``mix64`` is
the SplitMix64 finalizer. This is exactly the ``k``-th output of a SplitMix64
generator started at ``m``, so neighbouring indices give decorrelated seeds
and any worker can compute the seed of any path without coordination.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    """SplitMix64 output function on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def path_seed(master_seed, index):
    """Seed of path ``index`` under ``master_seed``."""
    if index < 0:
        raise ValueError(f"path index must be nonnegative, got {index}")
    return mix64((int(master_seed) + (int(index) + 1) * GOLDEN) & MASK64)


def rng_from_seed(seed):
    """A numpy Generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
