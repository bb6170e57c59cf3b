"""Seed derivation.

Every random stream is a PCG64 generator seeded from the triple
``(root seed, crc32(purpose tag), index)`` through ``numpy.random.SeedSequence``,
so streams for different purposes or grid cells never overlap and are
reproducible on any platform.
"""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(root: int, tag: str, *index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(root), zlib.crc32(tag.encode()), *map(int, index)])


def derive_rng(root: int, tag: str, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(root, tag, *index)))
