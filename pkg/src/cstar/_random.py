"""Seeded random streams.

Every random draw in the package comes from a Philox counter-based generator
keyed by ``SeedSequence([seed, *keys])``.  Tasks that may run in parallel get
their own key tuple, so results never depend on scheduling.
"""

import numpy as np

DEFAULT_SEED = 20240601


def stream(seed: int, *keys: int) -> np.random.Generator:
    entropy = [int(seed) & ((1 << 64) - 1)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
