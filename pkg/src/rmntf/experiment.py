"""Noise-level x Monte-Carlo-run x variant benchmark grid."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .config import BenchmarkSection, EvalSection, SolverSection
from .evaluation import accuracy, kmeans, nmi
from .rng import derive_seed
from .solver import fit

log = logging.getLogger(__name__)

CSV_COLUMNS = ("variant", "noise_kind", "level", "run", "acc", "nmi")


@dataclass(frozen=True)
class Cell:
    variant: str
    noise_kind: str
    level: float
    run: int
    acc: float
    nmi: float
    iterations: int


def run_seed(root: int, run: int) -> int:
    """Per-run seed shared by every variant, so variants see the same noise and init."""
    return int(derive_seed(root, "run", run).generate_state(1)[0])


def _variant_solver(solver: SolverSection, variant: str, seed: int, ranks):
    if variant == "ntd":
        return solver.build(seed, loss="quadratic", lam=0.0, ranks=ranks)
    return solver.build(seed, loss=variant, ranks=ranks)


def run_benchmark(x, labels, solver: SolverSection, bench: BenchmarkSection,
                  ev: EvalSection, root_seed: int = 0):
    """Return the grid cells in sorted (variant, level, run) order."""
    labels = np.asarray(labels)
    k = ev.k or int(np.unique(labels).size)
    ranks = solver.ranks
    cells = []
    for li, level in enumerate(bench.levels):
        spec = bench.noise_at(level)
        for run in range(ev.monte_carlo_runs):
            seed = run_seed(root_seed, run)
            y = spec.apply(x, seed, li)
            for variant in bench.variants:
                model, _, report = fit(y, _variant_solver(solver, variant, seed, ranks))
                pred, _ = kmeans(model.factors[-1], k, seed=seed, restarts=ev.restarts)
                cells.append(Cell(variant, spec.kind, float(level), run,
                                  accuracy(labels, pred), nmi(labels, pred),
                                  report.iterations_run))
                log.info("%s level=%g run=%d acc=%.3f", variant, level, run, cells[-1].acc)
    order = {v: i for i, v in enumerate(bench.variants)}
    cells.sort(key=lambda c: (order[c.variant], c.level, c.run))
    return cells


def cells_to_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cells:
        w.writerow([c.variant, c.noise_kind, repr(c.level), c.run, repr(c.acc), repr(c.nmi)])
    return buf.getvalue()


def summarize(cells) -> dict:
    """Mean and (population) standard deviation of ACC/NMI per variant and level."""
    groups = {}
    for c in cells:
        groups.setdefault((c.variant, c.noise_kind, c.level), []).append(c)
    out = []
    for (variant, kind, level), cs in groups.items():
        acc = np.array([c.acc for c in cs])
        nm = np.array([c.nmi for c in cs])
        out.append({
            "variant": variant,
            "noise_kind": kind,
            "level": level,
            "runs": len(cs),
            "acc_mean": float(acc.mean()),
            "acc_std": float(acc.std()),
            "nmi_mean": float(nm.mean()),
            "nmi_std": float(nm.std()),
            "iterations_median": float(np.median([c.iterations for c in cs])),
        })
    return {"groups": out}
