"""Deterministic random sub-streams.

Sample ``i`` of an ensemble with master seed ``seed`` draws from
``SeedSequence(seed, spawn_key=(i, purpose))``.  numpy documents this
hashing as stable across versions, and the stream of sample ``i`` does not
depend on how many other samples exist, so enlarging an ensemble never
perturbs earlier samples.
"""

import numpy as np

GEOMETRY = 0
HOLES = 1
WALK_STEPS = 2
WALK_CROSSINGS = 3
LIMIT = 4


def substream(seed: int, index: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index, purpose))))
