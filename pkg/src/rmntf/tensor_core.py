"""Dense tensor algebra for Tucker models.

Tensors are plain ``numpy.ndarray`` objects of dtype float64.  Every
linearization (unfolding, vectorization, file layout) uses the
first-index-fastest convention, so that

    vec(S x_1 A1 x_2 A2 ... x_N AN) = (AN kron ... kron A1) vec(S)

and the mode-n unfolding puts the fiber ``t[i_1, ..., :, ..., i_N]`` at
column ``sum_{k != n} i_k J_k`` with ``J_k = prod_{m < k, m != n} I_m``.

Modes are 0-based throughout.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

MAX_ORDER = 8


def _check_mode(t: np.ndarray, mode: int) -> None:
    if not 0 <= mode < t.ndim:
        raise ValueError(f"invalid mode {mode} for a tensor of order {t.ndim}")


def as_tensor(data, shape=None) -> np.ndarray:
    """Return ``data`` as a float64 array, optionally reshaped first-index-fastest."""
    arr = np.asarray(data, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(tuple(shape), order="F")
    if arr.ndim > MAX_ORDER:
        raise ValueError(f"tensors of order > {MAX_ORDER} are not supported")
    return arr


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding: an ``I_mode x prod(I_k, k != mode)`` matrix."""
    _check_mode(t, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of the given ``shape``."""
    shape = tuple(int(s) for s in shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"invalid mode {mode} for a tensor of order {len(shape)}")
    m = np.asarray(m, dtype=np.float64)
    rest = int(np.prod(shape)) // shape[mode] if shape[mode] else 0
    if m.shape != (shape[mode], rest):
        raise ValueError(
            f"shape mismatch: matrix {m.shape} cannot fold into {shape} along mode {mode}"
        )
    moved = (shape[mode],) + shape[:mode] + shape[mode + 1 :]
    return np.moveaxis(np.reshape(m, moved, order="F"), 0, mode)


def mode_n_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Multiply tensor ``t`` by matrix ``m`` along ``mode``.

    The result has ``m.shape[0]`` in place of ``t.shape[mode]`` and satisfies
    ``unfold(result, mode) == m @ unfold(t, mode)``.
    """
    _check_mode(t, mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"dimension mismatch: matrix {m.shape} against mode {mode} of extent {t.shape[mode]}"
        )
    out = np.tensordot(m, t, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def multi_mode_product(t: np.ndarray, matrices, skip=None, transpose=False) -> np.ndarray:
    """Apply ``matrices[n]`` along every mode ``n`` except ``skip``.

    With ``transpose=True`` each matrix is transposed first, which is the
    contraction ``t x_n A_n^T`` used by the core update.
    """
    out = t
    for n, a in enumerate(matrices):
        if n == skip:
            continue
        out = mode_n_product(out, a.T if transpose else a, n)
    return out


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def kronecker_chain(matrices) -> np.ndarray:
    """``matrices[0] kron matrices[1] kron ...`` evaluated left to right."""
    return reduce(kronecker, matrices)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def vectorize(t: np.ndarray) -> np.ndarray:
    """Column vector of ``t`` in first-index-fastest order."""
    return np.reshape(np.asarray(t, dtype=np.float64), -1, order="F")


def factor_context(core: np.ndarray, factors, mode: int) -> np.ndarray:
    """The ``r_mode x prod(I_k, k != mode)`` matrix ``B^T = S_(mode) (kron_{i != mode} A_i^T)``.

    Computed by contracting the core with every other factor, never forming
    the Kronecker product.  ``fold(A_mode @ B^T, mode, shape)`` is the full
    reconstruction.
    """
    _check_mode(core, mode)
    if len(factors) != core.ndim:
        raise ValueError(f"expected {core.ndim} factors, got {len(factors)}")
    for n, a in enumerate(factors):
        if a.ndim != 2 or a.shape[1] != core.shape[n]:
            raise ValueError(
                f"rank mismatch: factor {n} has shape {a.shape}, core rank is {core.shape[n]}"
            )
    return unfold(multi_mode_product(core, factors, skip=mode), mode)


def tucker_to_tensor(core: np.ndarray, factors) -> np.ndarray:
    """Full tensor ``S x_1 A_1 ... x_N A_N``."""
    return multi_mode_product(core, factors)
