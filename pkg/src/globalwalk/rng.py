"""Seeded random-stream helpers.

All stochastic components draw from streams keyed by integer tuples, so a
run is reproducible from its top-level seed alone and independent streams
(walk generation, negative sampling, k-means restarts, edge splits) never
interfere with each other.
"""

from __future__ import annotations

import numpy as np

# Stream purpose tags, used as key components so that e.g. the walk stream
# for epoch 0 can never collide with the training stream for epoch 0.
INIT = 0
WALK = 1
TRAIN = 2
KMEANS = 3
SPLIT = 4
ORDER = 5


def stream(*keys: int) -> np.random.Generator:
    """Return a Generator seeded from the given key tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def derive_seed(*keys: int) -> int:
    """Collapse a key tuple to a single uint64 seed (for non-numpy RNGs)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])
