"""Seeded random streams.

Every stochastic component takes an explicit Generator. Streams are derived
from an integer key path so sibling concerns (init, batching, regularizer
draws, ...) never share draws and stay individually reproducible.
"""

import numpy as np


def make_rng(seed, *key):
    seq = np.random.SeedSequence([int(seed), *(int(k) for k in key)])
    return np.random.Generator(np.random.PCG64(seq))
