"""Corruption protocols for nonnegative data: Laplace noise and salt & pepper."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import derive_rng


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    delta: Optional[float] = None
    fraction: Optional[float] = None
    value_max: float = 255.0

    def __post_init__(self):
        if self.kind not in ("laplace", "salt_pepper"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.value_max > 0:
            raise ValueError("value_max must be positive")
        if self.kind == "laplace" and not (self.delta is not None and self.delta > 0):
            raise ValueError("laplace noise needs delta > 0")
        if self.kind == "salt_pepper" and not (self.fraction is not None and 0 <= self.fraction <= 1):
            raise ValueError("salt_pepper noise needs fraction in [0, 1]")

    @property
    def level(self) -> float:
        return self.delta if self.kind == "laplace" else self.fraction

    def apply(self, x, seed: int, *index: int) -> np.ndarray:
        if self.kind == "laplace":
            return add_laplace(x, self.delta, self.value_max, seed, *index)
        return add_salt_pepper(x, self.fraction, self.value_max, seed, *index)


def laplace_samples(rng: np.random.Generator, delta: float, size) -> np.ndarray:
    """Inverse-CDF draws from Laplace(0, delta)."""
    # open interval (0, 1) keeps the log finite
    u = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=size)
    c = u - 0.5
    return -delta * np.sign(c) * np.log1p(-2.0 * np.abs(c))


def add_laplace(x, delta: float, value_max: float = 255.0, seed: int = 0, *index: int) -> np.ndarray:
    """``clip(x + eta, 0, value_max)`` with i.i.d. Laplace(0, delta) noise on every entry."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    x = np.asarray(x, dtype=np.float64)
    rng = derive_rng(seed, "laplace", *index)
    eta = laplace_samples(rng, delta, x.size).reshape(x.shape, order="F")
    return np.clip(x + eta, 0.0, value_max)


def add_salt_pepper(x, fraction: float, value_max: float = 255.0, seed: int = 0, *index: int) -> np.ndarray:
    """Set ``round(fraction * size)`` distinct entries to 0 or ``value_max`` (probability 1/2 each)."""
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    x = np.asarray(x, dtype=np.float64)
    rng = derive_rng(seed, "salt_pepper", *index)
    count = int(round(fraction * x.size))
    flat = np.reshape(x, -1, order="F").copy()
    pos = rng.choice(x.size, size=count, replace=False)
    flat[pos] = rng.integers(0, 2, size=count) * float(value_max)
    return np.clip(flat, 0.0, value_max).reshape(x.shape, order="F")
