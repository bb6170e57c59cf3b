"""Command line front end.

Subcommands: ``fit``, ``eval``, ``noise``, ``graph``, ``benchmark`` and the
helper ``synth``.  Exit codes: 0 success, 1 usage or IO/validation error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as dio
from .config import ConfigError, ExperimentConfig
from .evaluation import accuracy, kmeans, nmi
from .experiment import cells_to_csv, run_benchmark, summarize
from .graph import build_affinity, sample_matrix
from .noise import add_laplace, add_salt_pepper
from .solver import NumericalError, fit, reconstruct
from .synthetic import planted_clusters, planted_tucker

log = logging.getLogger("rmntf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ranks(text):
    return [int(v) for v in text.replace("x", ",").split(",") if v]


def _tau(text):
    return text if text == "mean" else float(text)


def _global_flags(parser, suppress):
    d = argparse.SUPPRESS
    parser.add_argument("--config", type=Path, default=d if suppress else None,
                        help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=d if suppress else None,
                        help="root seed (overrides the config)")
    parser.add_argument("--out", type=Path, default=d if suppress else None,
                        help="output directory (output file for noise/graph)")
    parser.add_argument("--quiet", action="store_true", default=d if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rmntf", description="Robust manifold nonnegative Tucker factorization")
    _global_flags(p, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", parents=[common], help="fit a model to a DTF tensor")
    f.add_argument("--in", dest="input", type=Path)
    f.add_argument("--ranks", type=_ranks)
    f.add_argument("--loss", choices=["quadratic", "cim", "huber", "cauchy"])
    f.add_argument("--lambda", dest="lam", type=float)

    e = sub.add_parser("eval", parents=[common], help="cluster sample factors and score them")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path, help="model directory written by fit")
    src.add_argument("--factor", type=Path, help="DTF matrix of sample representations")
    src.add_argument("--pred", type=Path, help="predicted labels file (skips clustering)")
    e.add_argument("--labels", type=Path, required=True)
    e.add_argument("--k", type=int)
    e.add_argument("--restarts", type=int, default=10)

    n = sub.add_parser("noise", parents=[common], help="corrupt a DTF tensor")
    n.add_argument("--kind", choices=["laplace", "salt_pepper"], required=True)
    n.add_argument("--delta", type=float)
    n.add_argument("--fraction", type=float)
    n.add_argument("--value-max", type=float, default=255.0)
    n.add_argument("--in", dest="input", type=Path, required=True)
    n.add_argument("--binary", action="store_true")

    g = sub.add_parser("graph", parents=[common], help="export the kNN affinity as an edge list")
    g.add_argument("--in", dest="input", type=Path, required=True)
    g.add_argument("--p", type=int, default=3)
    g.add_argument("--tau", type=_tau, default="mean")

    sub.add_parser("benchmark", parents=[common], help="noise x runs x variants grid")

    s = sub.add_parser("synth", parents=[common], help="write planted synthetic data")
    s.add_argument("--kind", choices=["clusters", "tucker"], default="clusters")
    s.add_argument("--shape", type=_ranks, default=[12, 12, 30])
    s.add_argument("--ranks", type=_ranks, default=[3, 3, 3])
    s.add_argument("--per-cluster", type=int, default=30)
    s.add_argument("--clusters", type=int, default=3)
    s.add_argument("--background", type=float, default=0.5)
    return p


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = args.out
    return cfg


def _need(value, what):
    if value is None:
        raise UsageError(f"missing {what}")
    return value


def _existing(path, what):
    _need(path, what)
    if not Path(path).exists():
        raise UsageError(f"{what} not found: {path}")
    return path


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    dataset = _existing(args.input or cfg.dataset, "dataset")
    out = _need(cfg.output, "output directory (--out)")
    x = dio.load_dtf(dataset)
    if cfg.noise is not None:
        x = cfg.noise.apply(x, cfg.seed)
    sec = cfg.solver
    if args.loss:
        sec.loss = args.loss
    if args.lam is not None:
        sec.lam = args.lam
    solver = sec.build(cfg.seed, ranks=args.ranks or sec.ranks)
    if len(solver.ranks) != x.ndim:
        raise UsageError(f"{len(solver.ranks)} ranks for a tensor of order {x.ndim}")
    for r, i in zip(solver.ranks, x.shape):
        if r > i:
            raise UsageError(f"rank > dimension: rank {r} for extent {i}")
    model, w, report = fit(x, solver)
    out.mkdir(parents=True, exist_ok=True)
    dio.save_model(out / "model", model)
    dio.save_dtf(out / "weights.dtf", w)
    dio.write_json(out / "report.json", report.to_json())
    (out / "trajectory.csv").write_text(
        "iter,objective\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(report.objective, 1))
    )
    log.info("fit: %d iterations (%s), wrote %s", report.iterations_run, report.stop_reason, out)
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    truth = dio.load_labels(_existing(args.labels, "labels file"))
    if args.pred:
        pred = dio.load_labels(_existing(args.pred, "predictions file"))
    else:
        if args.model:
            rows = dio.load_model(_existing(args.model, "model directory")).factors[-1]
        else:
            rows = dio.load_dtf(_existing(args.factor, "factor file"))
        k = args.k or cfg.eval.k or int(np.unique(truth).size)
        pred, _ = kmeans(rows, k, seed=cfg.seed, restarts=args.restarts)
    result = {"acc": accuracy(truth, pred), "nmi": nmi(truth, pred)}
    print(json.dumps(result, sort_keys=True))
    if cfg.output is not None:
        cfg.output.mkdir(parents=True, exist_ok=True)
        dio.write_json(cfg.output / "eval.json", result)
        (cfg.output / "eval.csv").write_text(f"acc,nmi\n{result['acc']!r},{result['nmi']!r}\n")
        dio.save_labels(cfg.output / "pred.txt", pred)
    return 0


def cmd_noise(args) -> int:
    x = dio.load_dtf(_existing(args.input, "input tensor"))
    out = _need(args.out, "output file (--out)")
    seed = args.seed if args.seed is not None else 0
    if args.kind == "laplace":
        y = add_laplace(x, _need(args.delta, "--delta"), args.value_max, seed)
    else:
        y = add_salt_pepper(x, _need(args.fraction, "--fraction"), args.value_max, seed)
    dio.save_dtf(out, y, binary=args.binary)
    return 0


def cmd_graph(args) -> int:
    x = dio.load_dtf(_existing(args.input, "input tensor"))
    out = _need(args.out, "output file (--out)")
    g = build_affinity(sample_matrix(x), p=args.p, tau=args.tau)
    dio.write_edge_list(out, g.affinity)
    log.info("graph: %d nodes, tau=%g", g.n_samples, g.tau)
    return 0


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    x = dio.load_dtf(_existing(cfg.dataset, "dataset"))
    labels = dio.load_labels(_existing(cfg.labels, "labels file"))
    if labels.size != x.shape[-1]:
        raise UsageError(f"{labels.size} labels for {x.shape[-1]} samples")
    out = _need(cfg.output, "output directory (--out)")
    cells = run_benchmark(x, labels, cfg.solver, cfg.benchmark, cfg.eval, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "benchmark.csv").write_text(cells_to_csv(cells))
    dio.write_json(out / "summary.json", summarize(cells))
    return 0


def cmd_synth(args) -> int:
    out = _need(args.out, "output directory (--out)")
    seed = args.seed if args.seed is not None else 0
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "clusters":
        h, w = args.shape[:2]
        x, labels = planted_clusters((h, w), args.clusters, args.per_cluster,
                                     background=args.background, seed=seed)
        dio.save_labels(out / "labels.txt", labels)
    else:
        x = reconstruct(planted_tucker(args.shape, args.ranks, seed=seed))
    dio.save_dtf(out / "x.dtf", x)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "eval": cmd_eval,
    "noise": cmd_noise,
    "graph": cmd_graph,
    "benchmark": cmd_benchmark,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"rmntf: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"rmntf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
