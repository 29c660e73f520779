"""Principal component analysis: centered, never whitened.

Components come from the SVD of the centered data, ordered by descending
explained variance, with a fixed sign convention (each component's
largest-magnitude coordinate is positive) so fits are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray               # (d,)
    components: np.ndarray         # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), descending
    total_variance: float

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def pca_fit(X, k: int) -> PCAModel:
    """Fit the top-k principal directions of the centered data."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise DataError("PCA needs at least 2 rows")
    if not np.isfinite(X).all():
        raise DataError("PCA input holds non-finite values")
    if not 1 <= k <= min(n - 1, d):
        raise ConfigError(f"k must be in [1, {min(n - 1, d)}], got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    components = Vt[:k].copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    explained = (s[:k] ** 2) / (n - 1)
    total = float(np.sum(s**2) / (n - 1))
    return PCAModel(mean=mean, components=components,
                    explained_variance=explained, total_variance=total)


def project(model: PCAModel, X) -> np.ndarray:
    """Coordinates of the rows in component space: (X - mean) @ components.T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise DataError(f"expected (n, {model.d}) input, got {X.shape}")
    return (X - model.mean) @ model.components.T


def reconstruct(model: PCAModel, Z) -> np.ndarray:
    """Back to the original space: Z @ components + mean."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != model.k:
        raise DataError(f"expected (n, {model.k}) coordinates, got {Z.shape}")
    return Z @ model.components + model.mean


def explained_variance_ratio(model: PCAModel) -> np.ndarray:
    """Per-component share of the total variance; nonincreasing, sum <= 1."""
    if model.total_variance <= 0:
        raise DataError("zero-variance data has no explained variance ratio")
    return model.explained_variance / model.total_variance


def save_pca(model: PCAModel, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "n_features": model.d,
        "n_components": model.k,
        "total_variance": model.total_variance,
        "dtype": "f64le",
        "layout": "row-major",
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (path / "mean.bin").write_bytes(np.ascontiguousarray(model.mean, "<f8").tobytes())
    (path / "components.bin").write_bytes(
        np.ascontiguousarray(model.components, "<f8").tobytes())
    (path / "variance.bin").write_bytes(
        np.ascontiguousarray(model.explained_variance, "<f8").tobytes())


def load_pca(path) -> PCAModel:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{path} has no manifest.json")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported format_version {manifest.get('format_version')!r}")
    d = int(manifest["n_features"])
    k = int(manifest["n_components"])
    mean = np.frombuffer((path / "mean.bin").read_bytes(), "<f8")
    components = np.frombuffer((path / "components.bin").read_bytes(), "<f8")
    variance = np.frombuffer((path / "variance.bin").read_bytes(), "<f8")
    if mean.shape != (d,) or components.shape != (k * d,) or variance.shape != (k,):
        raise DataError(f"payload sizes do not match manifest ({d} features, {k} components)")
    return PCAModel(mean=mean.astype(np.float64),
                    components=components.reshape(k, d).astype(np.float64),
                    explained_variance=variance.astype(np.float64),
                    total_variance=float(manifest["total_variance"]))
