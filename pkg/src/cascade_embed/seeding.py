"""Master-seed splitting.

Every random stream in the pipeline is derived from a triple
``(master_seed, module_tag, entity_id)``::

    SeedSequence([master_seed, crc32(module_tag), entity_id])

so a stream depends only on who consumes it, never on scheduling order.
"""

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def seed_sequence(master_seed: int, tag: str, entity_id: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed) & MASK64, tag_code(tag), int(entity_id)])


def rng_for(master_seed: int, tag: str, entity_id: int = 0) -> np.random.Generator:
    """Independent generator for one (module, entity) pair."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, tag, entity_id)))


def derive_seed(master_seed: int, tag: str, entity_id: int = 0) -> int:
    """A 64-bit integer seed for a sub-module, used when a seed must be recorded."""
    state = seed_sequence(master_seed, tag, entity_id).generate_state(1, dtype=np.uint64)
    return int(state[0])
