"""Half-quadratic multiplicative-update solver for robust manifold NTF.

One outer iteration runs, in order: scale resolution, weight tensor ``W``,
factors ``A_1 .. A_{N-1}``, the graph-regularised sample factor ``A_N``, and
the core ``S``.  At fixed ``W`` every update is a majorize-minimize step on

    0.5 * sum(W * (X - Xhat)**2) + 0.5 * lam * Tr(A_N^T L A_N)

so that quantity never increases within an iteration.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .graph import AffinityGraph, build_affinity, regularizer_value, sample_matrix
from .robust_loss import RobustLoss, ScaleState, resolve_scale, weight_map
from .rng import derive_rng
from .tensor_core import factor_context, mode_n_product, multi_mode_product, tucker_to_tensor, unfold

log = logging.getLogger(__name__)

EPS_DENOMINATOR = 1e-10


class NumericalError(ArithmeticError):
    """Raised when an update produces NaN or infinity."""


@dataclass
class TuckerModel:
    core: np.ndarray
    factors: List[np.ndarray]

    def __post_init__(self):
        if len(self.factors) != self.core.ndim:
            raise ValueError(f"core of order {self.core.ndim} needs {self.core.ndim} factors")
        for n, a in enumerate(self.factors):
            if a.shape[1] != self.core.shape[n]:
                raise ValueError(f"factor {n} has {a.shape[1]} columns, rank is {self.core.shape[n]}")

    @property
    def ranks(self):
        return self.core.shape

    @property
    def shape(self):
        return tuple(a.shape[0] for a in self.factors)

    def copy(self) -> "TuckerModel":
        return TuckerModel(self.core.copy(), [a.copy() for a in self.factors])

    def with_factor(self, mode: int, a: np.ndarray) -> "TuckerModel":
        factors = list(self.factors)
        factors[mode] = a
        return TuckerModel(self.core, factors)

    def with_core(self, core: np.ndarray) -> "TuckerModel":
        return TuckerModel(core, list(self.factors))


@dataclass
class SolverConfig:
    ranks: tuple
    loss: RobustLoss = field(default_factory=RobustLoss)
    lam: float = 1e5
    p: int = 3
    tau: Union[str, float] = "mean"
    max_iter: int = 500
    tol: float = 1e-6
    eps_denominator: float = EPS_DENOMINATOR
    seed: int = 0
    freeze_scale_after: Optional[int] = None

    def __post_init__(self):
        self.ranks = tuple(int(r) for r in self.ranks)
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.eps_denominator > 0:
            raise ValueError("eps_denominator must be positive")


@dataclass
class FitReport:
    objective: List[float]
    iterations_run: int
    stop_reason: str
    residual_mean_abs: float
    residual_max_abs: float
    wall_ms: float
    scales: List[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "objective": self.objective,
            "iterations": self.iterations_run,
            "stop_reason": self.stop_reason,
            "residual_mean_abs": self.residual_mean_abs,
            "residual_max_abs": self.residual_max_abs,
            "wall_ms": self.wall_ms,
        }


def initialize(shape, config: SolverConfig) -> TuckerModel:
    """Uniform ``[0.1, 1.1)`` entries from the seeded generator."""
    shape = tuple(int(s) for s in shape)
    ranks = config.ranks
    if len(ranks) != len(shape):
        raise ValueError(f"{len(ranks)} ranks given for a tensor of order {len(shape)}")
    for r, i in zip(ranks, shape):
        if r < 1 or r > i:
            raise ValueError(f"rank > dimension: rank {r} for extent {i}")
    rng = derive_rng(config.seed, "init")
    factors = [rng.uniform(0.1, 1.1, size=(i, r)) for i, r in zip(shape, ranks)]
    core = rng.uniform(0.1, 1.1, size=ranks)
    return TuckerModel(core, factors)


def reconstruct(model: TuckerModel) -> np.ndarray:
    return tucker_to_tensor(model.core, model.factors)


def permute_scale(model: TuckerModel, perms, scales) -> TuckerModel:
    """Apply ``A_n <- A_n P_n Q_n`` and ``S <- S x_n (P_n Q_n)^{-1}`` for every mode.

    ``perms[n]`` is a permutation of ``range(r_n)`` and ``scales[n]`` a
    positive vector (the diagonal of ``Q_n``).  The reconstruction is
    unchanged.
    """
    factors, core = [], model.core
    for n, (a, perm, q) in enumerate(zip(model.factors, perms, scales)):
        pq = np.eye(a.shape[1])[:, perm] * np.asarray(q, dtype=np.float64)[None, :]
        factors.append(a @ pq)
        core = mode_n_product(core, np.linalg.inv(pq), n)
    return TuckerModel(core, factors)


def update_weights(x, model: TuckerModel, loss: RobustLoss, scale: ScaleState) -> np.ndarray:
    return weight_map(loss, x - reconstruct(model), scale)


def _check_nonneg(name, arr):
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")


def _factor_terms(model: TuckerModel, x, w, mode: int):
    bt = factor_context(model.core, model.factors, mode)
    wn = unfold(w, mode)
    num = (wn * unfold(x, mode)) @ bt.T
    den = (wn * (model.factors[mode] @ bt)) @ bt.T
    return num, den


def update_factor(model: TuckerModel, x, w, mode: int, eps: float = EPS_DENOMINATOR) -> np.ndarray:
    """Weighted multiplicative update of ``A_mode``.

    ``A <- A * ((W_(n) * X_(n)) B) / ((W_(n) * (A B^T)) B + eps)``.
    """
    num, den = _factor_terms(model, x, w, mode)
    return model.factors[mode] * num / (den + eps)


def update_last_factor(
    model: TuckerModel, x, w, graph: Optional[AffinityGraph], lam: float, eps: float = EPS_DENOMINATOR
) -> np.ndarray:
    """Update of the sample factor with the graph term split into ``V`` and ``D``."""
    mode = model.core.ndim - 1
    a = model.factors[mode]
    num, den = _factor_terms(model, x, w, mode)
    if graph is not None and lam > 0:
        if graph.n_samples != a.shape[0]:
            raise ValueError(
                f"graph size mismatch: {graph.n_samples} nodes for {a.shape[0]} samples"
            )
        num = num + lam * (graph.affinity @ a)
        den = den + lam * (graph.degree[:, None] * a)
    return a * num / (den + eps)


def update_core(model: TuckerModel, x, w, eps: float = EPS_DENOMINATOR) -> np.ndarray:
    """Multiplicative core update, contracting with every ``A_n^T`` instead of forming ``F``."""
    num = multi_mode_product(w * x, model.factors, transpose=True)
    den = multi_mode_product(w * reconstruct(model), model.factors, transpose=True)
    return model.core * num / (den + eps)


def augmented_objective(x, model: TuckerModel, w, graph: Optional[AffinityGraph] = None, lam: float = 0.0) -> float:
    """``0.5 * sum(W * E^2) + 0.5 * lam * Tr(A_N^T L A_N)``; the conjugate term is not evaluated."""
    e = x - reconstruct(model)
    val = 0.5 * float(np.sum(w * e * e))
    if graph is not None and lam > 0:
        val += 0.5 * lam * regularizer_value(graph, model.factors[-1])
    return val


def _finite_or_raise(arr, what, it):
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values in {what} at iteration {it}")


def fit(x, config: SolverConfig, graph: Optional[AffinityGraph] = None, model: Optional[TuckerModel] = None):
    """Fit a robust manifold Tucker model to the nonnegative tensor ``x``.

    The graph is built from the last-mode slices of ``x`` unless one is
    passed.  Returns ``(model, W, report)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2:
        raise ValueError("input must have order >= 2")
    _finite_or_raise(x, "input", 0)
    _check_nonneg("input tensor", x)
    t0 = time.perf_counter()
    if model is None:
        model = initialize(x.shape, config)
    else:
        model = model.copy()
    if graph is None and config.lam > 0:
        graph = build_affinity(sample_matrix(x), p=config.p, tau=config.tau)
    eps = config.eps_denominator
    loss = config.loss
    n_modes = x.ndim

    objective: List[float] = []
    scales: List[float] = []
    scale = None
    stop_reason = "max_iter"
    for it in range(1, config.max_iter + 1):
        e = x - reconstruct(model)
        frozen = config.freeze_scale_after is not None and it > config.freeze_scale_after
        if scale is None or not frozen:
            scale = resolve_scale(loss, e)
        scales.append(scale.value)
        w = weight_map(loss, e, scale)

        for n in range(n_modes - 1):
            model = model.with_factor(n, update_factor(model, x, w, n, eps))
        model = model.with_factor(n_modes - 1, update_last_factor(model, x, w, graph, config.lam, eps))
        model = model.with_core(update_core(model, x, w, eps))
        for n, a in enumerate(model.factors):
            _finite_or_raise(a, f"factor {n}", it)
        _finite_or_raise(model.core, "core", it)

        obj = augmented_objective(x, model, w, graph, config.lam)
        if not np.isfinite(obj):
            raise NumericalError(f"non-finite objective at iteration {it}")
        objective.append(obj)
        if it > 1:
            prev = objective[-2]
            if abs(obj - prev) / max(prev, 1e-12) < config.tol:
                stop_reason = "tol"
                break

    e = x - reconstruct(model)
    w = weight_map(loss, e, scale)
    report = FitReport(
        objective=objective,
        iterations_run=len(objective),
        stop_reason=stop_reason,
        residual_mean_abs=float(np.mean(np.abs(e))),
        residual_max_abs=float(np.max(np.abs(e))),
        wall_ms=(time.perf_counter() - t0) * 1e3,
        scales=scales,
    )
    log.debug("fit stopped after %d iterations (%s)", report.iterations_run, stop_reason)
    return model, w, report


@dataclass(frozen=True)
class Projection:
    coefficients: np.ndarray
    raw: np.ndarray
    clamped: bool
    min_raw: float


def project_new_sample(
    x_new,
    model: TuckerModel,
    weights=None,
    neighbor_weights=None,
    lam: float = 0.0,
) -> Projection:
    """Closed-form representation of an unseen sample.

    Minimises ``||sqrt(w) * (x - a B^T)||^2 + lam * sum_j v_j ||a - a_j||^2``
    over the row vector ``a``, with ``a_j`` the trained sample
    representations, by solving

        (B' B'^T + lam * sum(v) I) a^T = B' (sqrt(w) * x) + lam * sum_j v_j a_j

    where ``B' = sqrt(w) * B^T``.  Negative coordinates are clamped to zero;
    the unclamped solution is kept on the result.
    """
    x_new = np.asarray(x_new, dtype=np.float64)
    last = model.core.ndim - 1
    if x_new.shape != model.shape[:last]:
        raise ValueError(f"sample shape {x_new.shape} does not match {model.shape[:last]}")
    xv = np.reshape(x_new, -1, order="F")
    bt = factor_context(model.core, model.factors, last)  # r_N x M
    w = np.ones_like(xv) if weights is None else np.reshape(np.asarray(weights, dtype=np.float64), -1, order="F")
    sw = np.sqrt(w)
    bp = bt * sw[None, :]
    r = bt.shape[0]
    lhs = bp @ bp.T
    rhs = bp @ (sw * xv)
    if neighbor_weights is not None and lam > 0:
        v = np.asarray(neighbor_weights, dtype=np.float64)
        if np.any(v < 0):
            raise ValueError("neighbor weights must be nonnegative")
        lhs = lhs + lam * v.sum() * np.eye(r)
        rhs = rhs + lam * (v @ model.factors[last])
    if np.linalg.matrix_rank(lhs) < r:
        raise np.linalg.LinAlgError("singular projection")
    raw = np.linalg.solve(lhs, rhs)
    min_raw = float(raw.min())
    return Projection(np.maximum(raw, 0.0), raw, min_raw < 0, min_raw)
