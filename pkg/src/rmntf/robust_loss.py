"""Robust error functions and their half-quadratic weight maps.

Each loss ``g`` is applied per entry of the residual ``e``.  The matching
weight is ``g'(e) / e`` up to a positive constant, normalised so that a zero
residual has weight 1:

===========  ================================  =========================
variant      g(e)                              w(e)
===========  ================================  =========================
quadratic    e^2                               1
cim          -k_sigma(e) / n (plus 1 overall)  exp(-e^2 / (2 sigma^2))
huber        e^2 or 2c|e| - c^2                min(1, c / |e|)
cauchy       ln(1 + (e / gamma)^2)             1 / (1 + (e / gamma)^2)
===========  ================================  =========================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

EPS_SCALE = 1e-8

VARIANTS = ("quadratic", "cim", "huber", "cauchy")
ADAPTIVE = ("adaptive", "median")

Scale = Union[str, float]


@dataclass(frozen=True)
class RobustLoss:
    """Loss variant plus its scale policy.

    ``scale`` is either a positive number (fixed sigma, c or gamma) or one of
    ``"adaptive"``/``"median"``, meaning the variant's data-driven rule:
    ``sigma^2 = mean(e^2) / 2`` for CIM and ``median(|e|)`` for Huber and
    Cauchy.  Ignored for the quadratic loss.
    """

    variant: str = "cim"
    scale: Scale = "adaptive"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown loss {self.variant!r}; expected one of {VARIANTS}")
        if isinstance(self.scale, str):
            if self.scale not in ADAPTIVE:
                raise ValueError(f"unknown scale policy {self.scale!r}")
        elif not (float(self.scale) > 0 and math.isfinite(float(self.scale))):
            raise ValueError("a fixed scale must be positive and finite")

    @property
    def is_adaptive(self) -> bool:
        return isinstance(self.scale, str)


@dataclass(frozen=True)
class ScaleState:
    """Resolved scale (sigma, c or gamma) for one iteration."""

    value: float
    source: str = "fixed"

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"scale must be positive and finite, got {self.value}")


def resolve_scale(loss: RobustLoss, e: np.ndarray) -> ScaleState:
    e = np.asarray(e, dtype=np.float64)
    if e.size == 0:
        raise ValueError("empty residual")
    if not loss.is_adaptive:
        return ScaleState(float(loss.scale), "fixed")
    if loss.variant == "cim":
        sigma2 = max(float(np.mean(e * e)) / 2.0, EPS_SCALE)
        return ScaleState(math.sqrt(sigma2), "adaptive")
    if loss.variant in ("huber", "cauchy"):
        return ScaleState(max(float(np.median(np.abs(e))), EPS_SCALE), "adaptive")
    return ScaleState(1.0, "adaptive")


def loss_value(loss: RobustLoss, e: np.ndarray, scale: ScaleState) -> float:
    e = np.asarray(e, dtype=np.float64)
    if not np.all(np.isfinite(e)):
        raise ValueError("non-finite residual")
    s = scale.value
    if loss.variant == "quadratic":
        return float(np.sum(e * e))
    if loss.variant == "cim":
        kern = np.exp(-(e * e) / (2 * s * s)) / (math.sqrt(2 * math.pi) * s)
        return float(1.0 - kern.mean())
    if loss.variant == "huber":
        a = np.abs(e)
        return float(np.sum(np.where(a <= s, e * e, 2 * s * a - s * s)))
    return float(np.sum(np.log1p((e / s) ** 2)))


def weight_map(loss: RobustLoss, e: np.ndarray, scale: ScaleState) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64)
    s = scale.value
    if loss.variant == "quadratic":
        return np.ones_like(e)
    if loss.variant == "cim":
        return np.exp(-(e * e) / (2 * s * s))
    if loss.variant == "huber":
        # exactly 1 on |e| <= c
        return s / np.maximum(np.abs(e), s)
    return 1.0 / (1.0 + (e / s) ** 2)
