"""Clustering of sample representations and the ACC / NMI scores."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .rng import derive_rng

MAX_LLOYD_ITER = 300


def _farthest_point_centers(rows, k, rng):
    n = rows.shape[0]
    idx = [int(rng.integers(n))]
    dist = np.sum((rows - rows[idx[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(dist))
        idx.append(nxt)
        dist = np.minimum(dist, np.sum((rows - rows[nxt]) ** 2, axis=1))
    return rows[idx].copy()


def _lloyd(rows, centers):
    k = centers.shape[0]
    labels = None
    for _ in range(MAX_LLOYD_ITER):
        d = np.sum((rows[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = rows[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                # refill an empty cluster with the worst-fit point
                far = int(np.argmax(d[np.arange(len(rows)), labels]))
                centers[j] = rows[far]
    sse = float(np.sum((rows - centers[labels]) ** 2))
    return labels, sse


def kmeans(rows, k: int, seed: int = 0, restarts: int = 10):
    """k-means with farthest-point seeding; best of ``restarts`` runs by SSE.

    Returns ``(labels, sse)``.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    n = rows.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    best = None
    for r in range(max(1, restarts)):
        rng = derive_rng(seed, "kmeans", r)
        labels, sse = _lloyd(rows, _farthest_point_centers(rows, k, rng))
        if best is None or sse < best[1]:
            best = (labels, sse)
    return best


def _check_pair(truth, pred):
    truth = np.asarray(truth, dtype=np.int64).ravel()
    pred = np.asarray(pred, dtype=np.int64).ravel()
    if truth.size != pred.size:
        raise ValueError(f"length mismatch: {truth.size} vs {pred.size}")
    if truth.size == 0:
        raise ValueError("empty labeling")
    return truth, pred


def contingency(truth, pred) -> np.ndarray:
    truth, pred = _check_pair(truth, pred)
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def accuracy(truth, pred) -> float:
    """Fraction matched under the best one-to-one relabeling of ``pred``."""
    table = contingency(truth, pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / float(table.sum())


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log2(p)))


def nmi(truth, pred) -> float:
    """Mutual information (bits) over the larger of the two marginal entropies.

    Two single-cluster labelings are the same partition and score 1.
    """
    table = contingency(truth, pred).astype(np.float64)
    n = table.sum()
    h_t = _entropy(table.sum(axis=1), n)
    h_p = _entropy(table.sum(axis=0), n)
    denom = max(h_t, h_p)
    if denom == 0.0:
        return 1.0
    joint = table / n
    outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / outer[nz])))
    return min(max(mi / denom, 0.0), 1.0)
