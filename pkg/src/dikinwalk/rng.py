"""Seeded, splittable random streams.

Every run is driven by one integer seed.  Independent streams (chains,
oracle samplers, repeated runs) are derived from it by spawn key, so results
do not depend on the order in which streams are consumed.
"""

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for ``seed`` and an optional stream path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))
