"""Counter-based seeding: stream ``i`` of a run is a pure function of ``(seed, i)``.

Every sampler takes an explicit :class:`numpy.random.Generator`; experiment
drivers obtain one per row with :func:`stream`, so results never depend on
evaluation order or thread count.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for row ``index`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def bernoulli_exact(rng: np.random.Generator, p, size=None):
    """Draw ``True`` with probability exactly ``p`` (a Fraction) using integer draws."""
    return rng.integers(0, p.denominator, size=size) < p.numerator
