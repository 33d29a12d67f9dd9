"""Seed derivation helpers.

Every Monte Carlo routine derives one child stream per trial (or per chunk)
from a master seed and a counter, so results do not depend on execution
order or on how trials are split across workers.
"""

import numpy as np


def child_rng(master_seed, *key):
    """Generator for sub-stream ``key`` of the stream rooted at ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=key))


def chunk_ranges(total, chunks):
    """Split ``range(total)`` into at most ``chunks`` contiguous (start, stop) pairs."""
    chunks = max(1, min(int(chunks), total)) if total else 1
    step = -(-total // chunks)
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]
