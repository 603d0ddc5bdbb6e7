"""Seeded, splittable randomness helpers.

All randomness in the package flows from one integer seed through
counter-based Philox streams.  Sub-tasks get independent child streams
keyed by small integer tuples, so results do not depend on execution
order.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Return a Philox generator for the child stream `key` of `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *key: int) -> int:
    """Derive a reproducible integer seed for the child stream `key`."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_without_replacement(rng: np.random.Generator, pool: np.ndarray, size: int) -> np.ndarray:
    """Draw `size` distinct entries from `pool` by a partial Fisher-Yates shuffle.

    O(size) swaps after one copy of the pool; deterministic under `rng`.
    """
    n = pool.shape[0]
    if size > n:
        raise ValueError(f"cannot sample {size} items from pool of {n}")
    work = pool.copy()
    uniforms = rng.random(size)  # one vectorized draw; u < 1 keeps j < n
    for i in range(size):
        j = i + int(uniforms[i] * (n - i))
        work[i], work[j] = work[j], work[i]
    return work[:size]
