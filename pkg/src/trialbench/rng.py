"""Seed derivation.

All randomness in the package flows from one master seed through named
derivation: a purpose string plus optional integer indices. Derived
streams are independent of thread count and of the order in which work
units are executed, because each unit owns a stream keyed by its name,
never by its position in a queue.
"""

import hashlib

import numpy as np


def _entropy(label) -> int:
    digest = hashlib.blake2b(repr(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    """SeedSequence for (master_seed, *labels); stable across runs and platforms."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_entropy(label) for label in labels)
    return np.random.SeedSequence(entropy)


def spawn(master_seed: int, *labels) -> np.random.Generator:
    """PCG64 generator derived from the master seed and a purpose label chain.

    Example: spawn(seed, "simulate", scenario_name, replicate_index).
    """
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *labels)))


def derive_seed(master_seed: int, *labels) -> int:
    """Integer sub-seed for components that take a seed rather than a rng."""
    return int(seed_sequence(master_seed, *labels).generate_state(1, np.uint64)[0])
