"""Seed derivation helpers.

Every random stream in the package is keyed by a tuple of non-negative
integers rooted at a user seed, so results never depend on call order or on
how work is scheduled across threads.
"""

import numpy as np

# stream tags, kept stable so saved reports stay reproducible
NOISE = 1
TRIAL = 2
RESTART = 3
RANDOM_SEARCH = 4
SIGMA = 5
COND = 6
TANGENT = 7
TENT = 8
REPETITION = 9


def stream(seed, *keys):
    """Counter-based generator for the stream ``(seed, *keys)``."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed, *keys):
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0] >> 1)
