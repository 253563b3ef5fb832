"""Named random sub-streams derived from one root seed."""

from __future__ import annotations

import os
import zlib

import numpy as np

SEED_ENV = "SUMFREE_SEED"


def root_seed(seed: int | None = None) -> int:
    """Explicit seed, else the SUMFREE_SEED environment variable, else 0."""
    if seed is not None:
        return int(seed)
    return int(os.environ.get(SEED_ENV, "0"))


def named_rng(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator for the stream (name, index); changing one stream leaves the others intact."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, key, int(index)]))
