"""JSON experiment configuration.

Schema (all sections optional except where a command needs them)::

    {
      "dataset": "x.dtf",              # DTF tensor, last mode indexes samples
      "labels": "labels.txt",          # one integer per line
      "seed": 0,                       # root seed
      "output": "out",
      "noise":   {"kind": "salt_pepper", "fraction": 0.2, "delta": null, "value_max": 255},
      "solver":  {"ranks": [3, 3, 3], "loss": "cim", "scale": "adaptive", "lambda": 1e5,
                  "p": 3, "tau": "mean", "tol": 1e-6, "max_iter": 500,
                  "eps_denominator": 1e-10, "freeze_scale_after": null},
      "eval":    {"k": 3, "restarts": 10, "monte_carlo_runs": 10},
      "benchmark": {"variants": ["ntd", "cim", "huber", "cauchy"],
                    "noise_kind": "salt_pepper", "levels": [0.1, 0.2], "value_max": 255}
    }

Unknown keys anywhere are rejected.  Relative paths resolve against the
directory holding the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

from .noise import NoiseSpec
from .robust_loss import RobustLoss
from .solver import SolverConfig

VARIANTS = ("ntd", "quadratic", "cim", "huber", "cauchy")


class ConfigError(ValueError):
    pass


def _take(section: dict, allowed, where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    return section


@dataclass
class SolverSection:
    ranks: Optional[List[int]] = None
    loss: str = "cim"
    scale: object = "adaptive"
    lam: float = 1e5
    p: int = 3
    tau: object = "mean"
    tol: float = 1e-6
    max_iter: int = 500
    eps_denominator: float = 1e-10
    freeze_scale_after: Optional[int] = None

    KEYS = ("ranks", "loss", "scale", "lambda", "p", "tau", "tol", "max_iter",
            "eps_denominator", "freeze_scale_after")

    @classmethod
    def from_dict(cls, d: dict) -> "SolverSection":
        d = dict(_take(d, cls.KEYS, "solver"))
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)

    def build(self, seed: int, loss: Optional[str] = None, lam: Optional[float] = None,
              ranks=None) -> SolverConfig:
        ranks = ranks if ranks is not None else self.ranks
        if ranks is None:
            raise ConfigError("solver.ranks is required")
        try:
            return SolverConfig(
                ranks=tuple(ranks),
                loss=RobustLoss(loss or self.loss, self.scale),
                lam=self.lam if lam is None else lam,
                p=self.p,
                tau=self.tau,
                max_iter=self.max_iter,
                tol=self.tol,
                eps_denominator=self.eps_denominator,
                seed=seed,
                freeze_scale_after=self.freeze_scale_after,
            )
        except ValueError as exc:
            raise ConfigError(f"solver: {exc}") from exc


@dataclass
class EvalSection:
    k: Optional[int] = None
    restarts: int = 10
    monte_carlo_runs: int = 10

    @classmethod
    def from_dict(cls, d: dict) -> "EvalSection":
        return cls(**_take(d, [f.name for f in fields(cls)], "eval"))


@dataclass
class BenchmarkSection:
    variants: List[str] = field(default_factory=lambda: ["ntd", "cim", "huber", "cauchy"])
    noise_kind: str = "salt_pepper"
    levels: List[float] = field(default_factory=lambda: [0.2])
    value_max: float = 255.0

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkSection":
        sec = cls(**_take(d, [f.name for f in fields(cls)], "benchmark"))
        bad = [v for v in sec.variants if v not in VARIANTS]
        if bad:
            raise ConfigError(f"benchmark: unknown variant(s) {bad}; expected {VARIANTS}")
        if sec.noise_kind not in ("laplace", "salt_pepper"):
            raise ConfigError(f"benchmark: unknown noise_kind {sec.noise_kind!r}")
        return sec

    def noise_at(self, level: float) -> NoiseSpec:
        if self.noise_kind == "laplace":
            return NoiseSpec("laplace", delta=level, value_max=self.value_max)
        return NoiseSpec("salt_pepper", fraction=level, value_max=self.value_max)


@dataclass
class ExperimentConfig:
    dataset: Optional[Path] = None
    labels: Optional[Path] = None
    seed: int = 0
    output: Optional[Path] = None
    noise: Optional[NoiseSpec] = None
    solver: SolverSection = field(default_factory=SolverSection)
    eval: EvalSection = field(default_factory=EvalSection)
    benchmark: BenchmarkSection = field(default_factory=BenchmarkSection)

    KEYS = ("dataset", "labels", "seed", "output", "noise", "solver", "eval", "benchmark")

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "ExperimentConfig":
        d = _take(d, cls.KEYS, "config")

        def path(key):
            return None if d.get(key) is None else base / d[key]

        noise = None
        if d.get("noise") is not None:
            nd = _take(d["noise"], ("kind", "delta", "fraction", "value_max"), "noise")
            try:
                noise = NoiseSpec(**nd)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"noise: {exc}") from exc
        try:
            return cls(
                dataset=path("dataset"),
                labels=path("labels"),
                seed=int(d.get("seed", 0)),
                output=path("output"),
                noise=noise,
                solver=SolverSection.from_dict(d.get("solver", {})),
                eval=EvalSection.from_dict(d.get("eval", {})),
                benchmark=BenchmarkSection.from_dict(d.get("benchmark", {})),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data, base=path.parent)
