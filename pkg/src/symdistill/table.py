"""Recorded input/output datasets and their on-disk exchange formats.

An IOTable pairs an n x d input matrix with an n x D output matrix under
named columns. The binary layout (manifest.json + raw little-endian float64
payloads) round-trips bit-exactly; a CSV form with ``in:``/``out:`` header
prefixes is accepted as a convenience.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, ExpressionError
from .expr import Expression, eval_batch, variable_indices
from .grammar import parse

FORMAT_VERSION = 1


@dataclass
class IOTable:
    input_names: list[str]
    output_names: list[str]
    X: np.ndarray
    Y: np.ndarray
    weights: np.ndarray | None = None
    allow_nonfinite: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.Y = np.asarray(self.Y, dtype=np.float64)
        if self.X.ndim != 2 or self.Y.ndim != 2:
            raise DataError(
                f"X and Y must be 2-D, got shapes {self.X.shape} and {self.Y.shape}"
            )
        if self.X.shape[0] != self.Y.shape[0]:
            raise DataError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}"
            )
        if self.X.shape[0] < 1:
            raise DataError("tables need at least one row")
        self.input_names = [str(n) for n in self.input_names]
        self.output_names = [str(n) for n in self.output_names]
        if len(self.input_names) != self.X.shape[1]:
            raise DataError(
                f"{len(self.input_names)} input names for {self.X.shape[1]} columns"
            )
        if len(self.output_names) != self.Y.shape[1]:
            raise DataError(
                f"{len(self.output_names)} output names for {self.Y.shape[1]} columns"
            )
        for names, side in ((self.input_names, "input"), (self.output_names, "output")):
            if len(set(names)) != len(names):
                raise DataError(f"duplicate {side} column names: {names}")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != (self.X.shape[0],):
                raise DataError(
                    f"weights shape {self.weights.shape} does not match {self.X.shape[0]} rows"
                )
        if not self.allow_nonfinite:
            if not np.isfinite(self.X).all() or not np.isfinite(self.Y).all():
                raise DataError(
                    "table holds non-finite values (pass allow_nonfinite to keep them)"
                )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.Y.shape[1]


def save_table(table: IOTable, path) -> None:
    """Write a table: directory in the binary layout, or CSV if path ends .csv."""
    path = Path(path)
    if path.suffix == ".csv":
        _save_csv(table, path)
        return
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "rows": table.n,
        "input_names": table.input_names,
        "output_names": table.output_names,
        "dtype": "f64le",
        "layout": "row-major",
    }
    if table.weights is not None:
        manifest["weights"] = True
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (path / "inputs.bin").write_bytes(np.ascontiguousarray(table.X, dtype="<f8").tobytes())
    (path / "outputs.bin").write_bytes(np.ascontiguousarray(table.Y, dtype="<f8").tobytes())
    if table.weights is not None:
        (path / "weights.bin").write_bytes(
            np.ascontiguousarray(table.weights, dtype="<f8").tobytes()
        )


def _save_csv(table: IOTable, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"in:{n}" for n in table.input_names] + [f"out:{n}" for n in table.output_names]
        )
        for i in range(table.n):
            writer.writerow(
                [f"{v:.17g}" for v in table.X[i]] + [f"{v:.17g}" for v in table.Y[i]]
            )


def _read_payload(path: Path, rows: int, cols: int, what: str) -> np.ndarray:
    raw = path.read_bytes()
    n_vals = len(raw) // 8
    if len(raw) % 8 != 0 or n_vals != rows * cols:
        held = n_vals // cols if cols else 0
        raise DataError(
            f"manifest declares {rows} rows for {what} but {path.name} "
            f"holds {held} rows ({n_vals} values for {cols} columns)"
        )
    return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).astype(np.float64)


def load_table(path, allow_nonfinite: bool = False) -> IOTable:
    """Load a table from the binary directory layout or from CSV."""
    path = Path(path)
    if path.is_dir():
        return _load_binary(path, allow_nonfinite)
    if path.suffix == ".csv":
        return _load_csv(path, allow_nonfinite)
    raise DataError(f"{path} is neither a table directory nor a .csv file")


def _load_binary(path: Path, allow_nonfinite: bool) -> IOTable:
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{path} has no manifest.json")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported format_version {manifest.get('format_version')!r}")
    if manifest.get("dtype") != "f64le" or manifest.get("layout") != "row-major":
        raise DataError("only dtype f64le with row-major layout is supported")
    rows = int(manifest["rows"])
    input_names = list(manifest["input_names"])
    output_names = list(manifest["output_names"])
    X = _read_payload(path / "inputs.bin", rows, len(input_names), "inputs")
    Y = _read_payload(path / "outputs.bin", rows, len(output_names), "outputs")
    weights = None
    if manifest.get("weights") and (path / "weights.bin").exists():
        weights = _read_payload(path / "weights.bin", rows, 1, "weights").ravel()
    return IOTable(input_names, output_names, X, Y, weights=weights,
                   allow_nonfinite=allow_nonfinite)


def _load_csv(path: Path, allow_nonfinite: bool) -> IOTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty")
        in_cols, out_cols = [], []
        for j, name in enumerate(header):
            if name.startswith("in:"):
                in_cols.append((j, name[3:]))
            elif name.startswith("out:"):
                out_cols.append((j, name[4:]))
            else:
                raise DataError(
                    f"CSV column {name!r} must be prefixed with 'in:' or 'out:'"
                )
        rows = list(reader)
    if not rows:
        raise DataError(f"{path} has a header but no rows")
    data = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    if data.shape[1] != len(header):
        raise DataError(f"CSV rows do not match the {len(header)}-column header")
    X = data[:, [j for j, _ in in_cols]]
    Y = data[:, [j for j, _ in out_cols]]
    return IOTable([n for _, n in in_cols], [n for _, n in out_cols], X, Y,
                   allow_nonfinite=allow_nonfinite)


@dataclass(frozen=True)
class VariableTransform:
    """A derived input column computed from existing inputs."""

    new_name: str
    formula: Expression

    @classmethod
    def from_spec(cls, spec: str, input_names: Sequence[str]) -> "VariableTransform":
        """Parse a ``name=expression`` transform over the given columns."""
        name, sep, body = spec.partition("=")
        name = name.strip()
        if not sep or not name or not body.strip():
            raise DataError(f"transform {spec!r} must look like 'name=expression'")
        return cls(name, parse(body.strip(), variables=list(input_names)))


def apply_transforms(table: IOTable, transforms: Sequence[VariableTransform],
                     drop: Sequence[str] = (), strict: bool = True) -> IOTable:
    """Append derived input columns, then optionally drop columns by name.

    Transforms apply sequentially; later formulas may reference columns
    created by earlier ones. With ``strict``, rows where a formula produces a
    non-finite value are reported as an error. The input table is not
    mutated.
    """
    X = table.X.copy()
    names = list(table.input_names)
    for t in transforms:
        if t.new_name in names:
            raise DataError(f"transform column {t.new_name!r} already exists")
        for idx in variable_indices(t.formula):
            if idx >= len(names):
                raise ExpressionError(
                    f"transform {t.new_name!r} references column index {idx}, "
                    f"table has {len(names)}"
                )
        col = eval_batch(t.formula, X)
        bad = np.flatnonzero(~np.isfinite(col))
        if strict and bad.size:
            shown = ", ".join(str(i) for i in bad[:10])
            more = f" (+{bad.size - 10} more)" if bad.size > 10 else ""
            raise DataError(
                f"transform {t.new_name!r} is non-finite on rows [{shown}]{more}"
            )
        X = np.column_stack([X, col])
        names.append(t.new_name)
    if drop:
        missing = [c for c in drop if c not in names]
        if missing:
            raise DataError(f"cannot drop unknown columns {missing}")
        keep = [j for j, n in enumerate(names) if n not in set(drop)]
        if not keep:
            raise DataError("cannot drop every input column")
        X = X[:, keep]
        names = [names[j] for j in keep]
    return replace(table, input_names=names, X=X, Y=table.Y.copy(),
                   allow_nonfinite=table.allow_nonfinite or not strict)
