"""
Seed derivation for reproducible Monte Carlo.

Every replicate draws from its own counter-based stream keyed by
(seed, replicate index, *stream tags), so results do not depend on the
order or the process in which replicates run.
"""

from typing import Optional, Union

import numpy as np

SeedLike = Union[int, np.random.Generator]


def replicate_rng(seed: int, replicate: int = 0, *stream: int) -> np.random.Generator:
    """Philox generator for one replicate of a seeded run."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate), *map(int, stream)))
    return np.random.Generator(np.random.Philox(sequence))


def as_generator(seed: Optional[SeedLike]) -> np.random.Generator:
    """Accept either an integer seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("A seed or a numpy Generator is required")
    return replicate_rng(seed)
