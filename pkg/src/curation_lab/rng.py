"""Splittable, counter-based random streams.

Every stochastic operation in the package takes an explicit integer seed and
derives independent Philox streams keyed by (operation domain, index...).
Streams are pre-assigned, never handed between consumers, so results are
bit-reproducible no matter how work is scheduled.
"""
from __future__ import annotations

import numpy as np

# Stream domains. Each stochastic operation owns one so that reusing a seed
# across operations never aliases streams.
MC_KERNEL = 1
CURATION = 2
SAMPLE_LOOP = 3
SELECTION_MASS = 4
PERTURB = 5
PROBE = 6
VERIFY = 7
SWEEP = 8
TRAJECTORY = 9


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def generator(seed: int, *key: int) -> np.random.Generator:
    """Philox generator on the stream addressed by (seed, *key)."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))


def derive_seed(seed: int, *key: int) -> int:
    """Stable integer sub-seed for APIs that take a plain seed."""
    return int(seed_sequence(seed, *key).generate_state(1, np.uint64)[0])


def categorical(rng: np.random.Generator, cum_probs: np.ndarray, size) -> np.ndarray:
    """Draw indices with P(i) proportional to the increments of cum_probs."""
    u = rng.random(size) * cum_probs[-1]
    idx = np.searchsorted(cum_probs, u, side="right")
    return np.minimum(idx, len(cum_probs) - 1)
