"""Writer/reader for the on-disk I/O-table exchange format.

Layout: a directory holding manifest.json plus inputs.bin / outputs.bin as
raw little-endian float64, row-major. Values round-trip bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def write_table(path, X: np.ndarray, Y: np.ndarray,
                input_names=None, output_names=None) -> None:
    X = np.ascontiguousarray(X, dtype="<f8")
    Y = np.ascontiguousarray(Y, dtype="<f8")
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"need matching 2-D inputs/outputs, got {X.shape} and {Y.shape}"
        )
    if input_names is None:
        input_names = [f"x{i}" for i in range(X.shape[1])]
    if output_names is None:
        output_names = [f"y{j}" for j in range(Y.shape[1])]
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "rows": int(X.shape[0]),
        "input_names": list(input_names),
        "output_names": list(output_names),
        "dtype": "f64le",
        "layout": "row-major",
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (path / "inputs.bin").write_bytes(X.tobytes())
    (path / "outputs.bin").write_bytes(Y.tobytes())


def read_table(path) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {manifest.get('format_version')!r}")
    rows = int(manifest["rows"])
    in_names = list(manifest["input_names"])
    out_names = list(manifest["output_names"])
    X = np.frombuffer((path / "inputs.bin").read_bytes(), "<f8")
    Y = np.frombuffer((path / "outputs.bin").read_bytes(), "<f8")
    return (X.reshape(rows, len(in_names)), Y.reshape(rows, len(out_names)),
            in_names, out_names)
