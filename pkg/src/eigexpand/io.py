"""
Text serialization of functions, kernels and samples.

CSV files start with a ``# grid_T=<T>`` comment line followed by
row-major values written with 17 significant digits, which round-trips
every double exactly. JSON envelopes carry ``grid_T`` and either
``values`` or ``matrix``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .funcgrid import GridFn, KernelOp, make_grid
from .simulate import SamplePath

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_kernel_csv",
    "read_kernel_csv",
    "write_sample_csv",
    "read_sample_csv",
    "to_json",
    "from_json",
]


def _fmt(a):
    return "\n".join(",".join("%.17g" % v for v in row) for row in np.atleast_2d(a)) + "\n"


def write_matrix_csv(path, A, grid_T: int, extra: str = "") -> None:
    head = f"# grid_T={grid_T}" + (f" {extra}" if extra else "")
    Path(path).write_text(head + "\n" + _fmt(A))


def read_matrix_csv(path):
    """Return ``(matrix, grid_T)``; ``grid_T`` is None without a header."""
    text = Path(path).read_text().splitlines()
    T = None
    rows = []
    for line in text:
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            for tok in s[1:].split():
                if tok.startswith("grid_T="):
                    T = int(tok.split("=", 1)[1])
            continue
        try:
            rows.append([float(v) for v in s.split(",")])
        except ValueError as exc:
            raise ValidationError(f"{path}: non-numeric entry in line {s[:40]!r}") from exc
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    if len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: ragged rows")
    A = np.array(rows)
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{path}: non-finite values")
    return A, T


def write_kernel_csv(path, K: KernelOp) -> None:
    write_matrix_csv(path, K.matrix, K.grid.T, "symmetric=%d" % int(K.symmetric))


def read_kernel_csv(path, symmetric=None) -> KernelOp:
    A, T = read_matrix_csv(path)
    T = T or A.shape[1]
    if A.shape != (T, T):
        raise ValidationError(f"{path}: kernel must be {T}x{T}, got {A.shape}")
    if symmetric is None:
        symmetric = "symmetric=1" in Path(path).read_text().splitlines()[0]
    return KernelOp(make_grid(T), A, symmetric)


def write_sample_csv(path, sample: SamplePath) -> None:
    write_matrix_csv(path, sample.data, sample.grid.T, "n=%d" % sample.n)


def read_sample_csv(path) -> SamplePath:
    A, T = read_matrix_csv(path)
    T = T or A.shape[1]
    if A.shape[1] != T:
        raise ValidationError(f"{path}: rows have {A.shape[1]} values, header says {T}")
    return SamplePath(make_grid(T), A)


def to_json(obj) -> str:
    """JSON envelope of a GridFn or KernelOp."""
    if isinstance(obj, GridFn):
        d = {"grid_T": obj.grid.T, "values": obj.values.tolist()}
    elif isinstance(obj, KernelOp):
        d = {"grid_T": obj.grid.T, "matrix": obj.matrix.tolist(), "symmetric": obj.symmetric}
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__}")
    return json.dumps(d)


def from_json(text: str):
    d = json.loads(text)
    grid = make_grid(int(d["grid_T"]))
    if "values" in d:
        return GridFn(grid, d["values"])
    if "matrix" in d:
        return KernelOp(grid, d["matrix"], bool(d.get("symmetric", False)))
    raise ValidationError("envelope needs 'values' or 'matrix'")
