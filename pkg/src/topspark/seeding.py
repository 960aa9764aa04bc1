"""Named random sub-streams derived from one experiment seed."""
import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Generator for the sub-stream ``name`` of ``seed``.

    Streams with different names are statistically independent, so adding
    draws to one (say the encoder) never shifts another (say weight init).
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())]))
