"""Deterministic RNG substreams.

Every stochastic draw in the package is keyed by integer tags rather than by
call order, so results are reproducible regardless of event scheduling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(*tags: int) -> np.random.Generator:
    """Generator keyed by a tuple of integers (order-independent determinism)."""
    entropy = [int(t) & _MASK64 for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def stable_uniform(*tags: int) -> float:
    """One U[0,1) draw keyed by the tag tuple."""
    return float(substream(*tags).random())


def stable_normal(sigma: float, *tags: int) -> float:
    """One N(0, sigma^2) draw keyed by the tag tuple."""
    if sigma <= 0.0:
        return 0.0
    return float(substream(*tags).normal(0.0, sigma))
