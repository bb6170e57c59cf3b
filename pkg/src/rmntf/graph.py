"""k-nearest-neighbour heat-kernel graph over the sample mode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .tensor_core import unfold


@dataclass(frozen=True)
class AffinityGraph:
    """Symmetric affinity ``V`` with its degree vector and Laplacian ``L = D - V``."""

    affinity: np.ndarray
    tau: float
    p: int

    @property
    def n_samples(self) -> int:
        return self.affinity.shape[0]

    @property
    def degree(self) -> np.ndarray:
        """Diagonal of ``D`` (row sums of ``V``)."""
        return self.affinity.sum(axis=1)

    @property
    def laplacian(self) -> np.ndarray:
        return laplacian(self)[1]


def sample_matrix(x: np.ndarray) -> np.ndarray:
    """Rows are the vectorized samples, i.e. the last-mode slices of ``x``."""
    return unfold(x, x.ndim - 1)


def pairwise_sq_distances(rows: np.ndarray) -> np.ndarray:
    # direct differences, so identical samples are at distance exactly 0
    return cdist(rows, rows, metric="sqeuclidean")


def build_affinity(samples, p: int = 3, tau="mean") -> AffinityGraph:
    """Heat-kernel kNN graph.

    Parameters
    ----------
    samples : array
        Either an ``n x d`` matrix of vectorized samples or a sequence of
        equally shaped sample tensors.
    p : int
        Neighbour count.  ``i`` and ``j`` are connected when either is among
        the other's ``p`` nearest neighbours (squared Euclidean distance).
    tau : "mean" or float
        Kernel width.  ``"mean"`` uses the mean squared distance over the
        connected pairs.
    """
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        rows = np.asarray(samples, dtype=np.float64)
    else:
        arrs = [np.asarray(s, dtype=np.float64) for s in samples]
        if len({a.shape for a in arrs}) > 1:
            raise ValueError("all samples must share a shape")
        rows = np.stack([a.reshape(-1, order="F") for a in arrs])
    n = rows.shape[0]
    if p < 1:
        raise ValueError("p must be at least 1")
    if p >= n:
        raise ValueError(f"too many neighbors: p={p} with {n} samples")

    d = pairwise_sq_distances(rows)
    masked = d.copy()
    np.fill_diagonal(masked, np.inf)
    # stable sort keeps ties in index order
    nbrs = np.argsort(masked, axis=1, kind="stable")[:, :p]
    conn = np.zeros((n, n), dtype=bool)
    conn[np.repeat(np.arange(n), p), nbrs.ravel()] = True
    conn |= conn.T

    if isinstance(tau, str):
        if tau != "mean":
            raise ValueError(f"unknown tau policy {tau!r}")
        tau_val = float(d[conn].mean())
        if tau_val <= 0.0:
            tau_val = 1.0
    else:
        tau_val = float(tau)
        if not tau_val > 0.0:
            raise ValueError("tau must be positive")

    v = np.zeros((n, n))
    v[conn] = np.exp(-d[conn] / tau_val)
    return AffinityGraph(affinity=v, tau=tau_val, p=int(p))


def laplacian(g: AffinityGraph):
    """Return ``(D, L)`` as dense matrices."""
    deg = np.diag(g.affinity.sum(axis=1))
    return deg, deg - g.affinity


def regularizer_value(g: AffinityGraph, a_last: np.ndarray) -> float:
    """``Tr(A^T L A)``, the graph smoothness of the sample representations."""
    a_last = np.asarray(a_last, dtype=np.float64)
    if a_last.shape[0] != g.n_samples:
        raise ValueError(
            f"representation has {a_last.shape[0]} rows, graph has {g.n_samples} nodes"
        )
    deg = g.affinity.sum(axis=1)
    return float(np.sum(deg[:, None] * a_last * a_last) - np.sum(a_last * (g.affinity @ a_last)))
