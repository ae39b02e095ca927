"""Seeded random streams.

Every random draw in the package goes through a Philox counter-based
generator. Sub-streams for trials are keyed by ``(seed, *keys)`` through
:class:`numpy.random.SeedSequence`, so a trial's stream does not depend on
which worker runs it or in what order.
"""
import numpy as np


def make_rng(seed, *keys):
    """Return a Philox-backed generator for ``seed`` and optional sub-keys."""
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seeds and keys must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
