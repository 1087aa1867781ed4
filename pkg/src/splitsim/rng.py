"""Named, independently seeded RNG streams.

Each simulation concern (network jitter, scheduler choices, trace
generation) draws from its own stream so that changing how one concern
consumes randomness never perturbs the others, and policies compared under
the same seed see identical jitter.
"""
from __future__ import annotations

import numpy as np

STREAMS = ("jitter", "scheduler", "trace")


def stream(seed: int, name: str) -> np.random.Generator:
    """Generator for one named concern, fully determined by (seed, name)."""
    idx = STREAMS.index(name)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(idx,))))
