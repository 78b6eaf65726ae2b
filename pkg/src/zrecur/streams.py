"""Counter-based random streams.

Every sampler takes an explicit ``numpy.random.Generator``. Streams are
derived from ``(master seed, index...)`` through ``SeedSequence`` spawn keys
and fed to the Philox counter-based bit generator, so stream ``i`` does not
depend on how many other streams exist or which worker draws it.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``."""
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def substreams(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split ``rng`` into ``n`` independent child generators."""
    return list(rng.spawn(n))
