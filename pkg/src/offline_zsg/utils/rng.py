"""Seeded random generators shared by dataset sampling, splits and game generation."""

from typing import Union

import numpy as np

from .exceptions import ConfigurationError

BIT_GENERATORS = {
    # Counter-based; default.
    "philox": np.random.Philox,
    "pcg64": np.random.PCG64,
}

SeedKey = Union[int, str]


def _key_to_int(key: SeedKey) -> int:
    if isinstance(key, int):
        return key
    return int.from_bytes(key.encode("utf-8"), "little") % (2**32)


def make_generator(seed: int, *keys: SeedKey, bit_generator: str = "philox") -> np.random.Generator:
    """
    Build a generator for ``seed`` and an optional substream path.

    Args:
        seed: Non-negative base seed
        keys: Substream labels (ints or short strings) deriving independent streams
        bit_generator: Name of the bit generator ("philox" or "pcg64")

    Returns:
        numpy Generator
    """
    try:
        factory = BIT_GENERATORS[bit_generator.lower()]
    except KeyError:
        raise ConfigurationError(
            f"Unknown bit generator '{bit_generator}'. Must be one of {sorted(BIT_GENERATORS)}"
        )
    sequence = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_key_to_int(k) for k in keys)
    )
    return np.random.Generator(factory(sequence))


def derive_seed(seed: int, *keys: SeedKey) -> int:
    """Derive a child integer seed from ``seed`` and substream labels."""
    sequence = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_key_to_int(k) for k in keys)
    )
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
