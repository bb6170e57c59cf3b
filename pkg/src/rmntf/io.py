"""File formats: DTF tensors, label files, model directories, edge lists."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .tensor_core import as_tensor, vectorize

MAGIC = "DTF1"
ORDER_LINE = "order: first-fastest"


class FormatError(ValueError):
    pass


def _header(shape) -> str:
    return f"{MAGIC}\ndims: {' '.join(str(int(s)) for s in shape)}\n{ORDER_LINE}\n"


def save_dtf(path, t, binary: bool = False) -> None:
    """Write ``t`` as DTF text (default) or the binary variant."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        t = t.reshape(1)
    flat = vectorize(t)
    header = _header(t.shape)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(b"\n")
            fh.write(flat.astype("<f8").tobytes())
        else:
            # repr gives the shortest string that round-trips exactly
            fh.write(("\n".join(repr(float(v)) for v in flat) + "\n").encode("ascii"))


def load_dtf(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n", 3)
    if len(lines) < 4:
        raise FormatError(f"{path}: truncated DTF header")
    magic, dims, order, rest = lines
    if magic.strip() != MAGIC.encode():
        raise FormatError(f"{path}: not a DTF1 file")
    dims = dims.decode("ascii").strip()
    if not dims.startswith("dims:"):
        raise FormatError(f"{path}: missing dims line")
    try:
        shape = tuple(int(s) for s in dims[len("dims:"):].split())
    except ValueError as exc:
        raise FormatError(f"{path}: bad dims line") from exc
    if not shape or any(s <= 0 for s in shape):
        raise FormatError(f"{path}: extents must be positive")
    if order.decode("ascii").strip() != ORDER_LINE:
        raise FormatError(f"{path}: unsupported element order")
    size = int(np.prod(shape))
    if rest.startswith(b"\n"):
        payload = rest[1:]
        if len(payload) != 8 * size:
            raise FormatError(f"{path}: expected {8 * size} bytes, found {len(payload)}")
        flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    else:
        try:
            flat = np.array([float(tok) for tok in rest.split()], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric element") from exc
        if flat.size != size:
            raise FormatError(f"{path}: expected {size} values, found {flat.size}")
    return as_tensor(flat, shape)


def load_labels(path) -> np.ndarray:
    """One integer per line, aligned with the sample-mode index."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: not an integer label") from exc
    return np.asarray(out, dtype=np.int64)


def save_labels(path, labels) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def save_model(directory, model) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_dtf(d / "core.dtf", model.core)
    for n, a in enumerate(model.factors, 1):
        save_dtf(d / f"factor_{n}.dtf", a)


def load_model(directory):
    from .solver import TuckerModel

    d = Path(directory)
    core = load_dtf(d / "core.dtf")
    factors = [load_dtf(d / f"factor_{n}.dtf") for n in range(1, core.ndim + 1)]
    return TuckerModel(core, factors)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_edge_list(path, affinity: np.ndarray) -> None:
    """CSV ``i,j,weight`` for every nonzero affinity with ``i < j`` (0-based)."""
    rows, cols = np.nonzero(np.triu(affinity, k=1))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "weight"])
        for i, j in zip(rows, cols):
            w.writerow([int(i), int(j), repr(float(affinity[i, j]))])


def read_edge_list(path, n: int) -> np.ndarray:
    v = np.zeros((n, n))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            i, j, wt = int(row["i"]), int(row["j"]), float(row["weight"])
            v[i, j] = v[j, i] = wt
    return v
