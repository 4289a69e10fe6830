"""Seed derivation for independent, reproducible random streams."""

from enum import IntEnum

import numpy as np

_SEED_MODULUS = 1 << 63


class Stream(IntEnum):
    """Stream keys; a run seed plus a key yields an independent child stream."""
    INITIAL_SET = 1
    INIT_PARAMS = 2
    FINE_TUNE = 3
    QUERY = 4
    HEAD = 5


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic child seed of ``master`` for the key path ``keys``."""
    entropy = [key % _SEED_MODULUS for key in (master, *keys)]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) | (int(state[1]) >> 1)


def make_rng(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))
