"""Seed partitioning: every random draw comes from its own keyed substream."""

import enum

import numpy as np


class Purpose(enum.IntEnum):
    DATA = 1
    TEST = 2
    SPLIT = 3
    MINIBATCH = 4
    TIEBREAK = 5


def substream(seed: int, purpose: Purpose, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, *keys)``.

    Changing the number of agents or rounds never shifts the draws of an
    unrelated key.
    """
    entropy = [int(seed), int(purpose), *(int(k) + 1 for k in keys)]
    if any(e < 0 for e in entropy):
        raise ValueError(f"seed and keys must be nonnegative, got {entropy}")
    return np.random.default_rng(np.random.SeedSequence(entropy))
