"""Deterministic random-stream derivation.

All randomness in the package flows through counter-based Philox generators.
A master seed plus an integer path (domain tag, replication index, ...)
deterministically names one stream, so replications are independent and any
subset of them can be recomputed in isolation (serial and parallel runs see
the same numbers).
"""

from __future__ import annotations

import numpy as np

# Domain tags keep streams of different subsystems disjoint even when the
# remaining path indices collide.
DOMAIN_SAMPLE = 0
DOMAIN_RISK = 1
DOMAIN_EXCEEDANCE = 2
DOMAIN_TEST = 3
DOMAIN_PRIOR = 4
DOMAIN_CORPUS = 5


def substream_seed(master_seed: int, *path: int) -> int:
    """Derive a 64-bit stream seed from a master seed and an index path."""
    if master_seed < 0:
        raise ValueError("master seed must be nonnegative")
    ss = np.random.SeedSequence([int(master_seed), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


def rng_from_seed(seed: int) -> np.random.Generator:
    """Philox generator for one stream seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
