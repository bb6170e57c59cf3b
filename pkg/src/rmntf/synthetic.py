"""Planted nonnegative Tucker data for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .rng import derive_rng
from .solver import TuckerModel, reconstruct


def planted_tucker(shape, ranks, seed: int = 0) -> TuckerModel:
    """Random nonnegative Tucker model with uniform ``[0, 1)`` entries."""
    rng = derive_rng(seed, "planted")
    factors = [rng.uniform(0.0, 1.0, size=(i, r)) for i, r in zip(shape, ranks)]
    core = rng.uniform(0.0, 1.0, size=tuple(ranks))
    return TuckerModel(core, factors)


def planted_clusters(
    image_shape=(12, 12),
    n_clusters: int = 3,
    per_cluster: int = 30,
    rank: int = 3,
    background: float = 0.5,
    jitter: float = 0.1,
    value_max: float = 255.0,
    seed: int = 0,
):
    """Clustered image stack of shape ``image_shape + (n_clusters * per_cluster,)``.

    The stack is an exact nonnegative Tucker tensor of ranks
    ``(rank, rank, n_clusters)``.  All classes share the spatial factors; class
    ``c`` owns core slice ``c``.  Sample ``i`` of class ``c`` mixes the slices
    with coefficients ``e_c + background`` times uniform jitter in
    ``[1 - jitter, 1 + jitter]``, so a large ``background`` makes the classes
    look alike.  Values are rescaled so the maximum is ``0.8 * value_max``.

    Returns ``(x, labels)``.
    """
    rng = derive_rng(seed, "clusters")
    n = n_clusters * per_cluster
    h, w = image_shape
    u = rng.uniform(0.0, 1.0, size=(h, rank)) ** 2
    v = rng.uniform(0.0, 1.0, size=(w, rank)) ** 2
    core = rng.uniform(0.0, 1.0, size=(rank, rank, n_clusters))
    labels = np.repeat(np.arange(n_clusters), per_cluster)
    coef = np.full((n, n_clusters), float(background))
    coef[np.arange(n), labels] += 1.0
    coef *= rng.uniform(1.0 - jitter, 1.0 + jitter, size=coef.shape)
    x = reconstruct(TuckerModel(core, [u, v, coef]))
    x *= 0.8 * value_max / x.max()
    return x, labels
