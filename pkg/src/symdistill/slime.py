"""Local symbolic surrogates around a point of interest.

The locale dataset mixes the J nearest recorded neighbors (weighted M) with
Gaussian-sampled synthetic points whose weights come from a proximity
kernel. Fitting minimizes the weight-normalized loss with unchanged
Pareto-front and selection semantics.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, DataError
from .search import FitResult, SRConfig, evolve, select_best
from .table import IOTable


@dataclass
class SlimeParams:
    """Locale construction parameters.

    ``sigma2`` is the synthetic sampling variance; when omitted it defaults
    per coordinate to half the sample variance of the J neighbors.
    ``kernel_sigma2`` is the proximity-kernel bandwidth and defaults to the
    sampling variance (its mean across coordinates when that is a vector).
    """

    x_star: np.ndarray
    J: int
    n_synthetic: int = 0
    sigma2: float | None = None
    M: float = 1.0
    kernel_sigma2: float | None = None

    def __post_init__(self):
        self.x_star = np.asarray(self.x_star, dtype=np.float64).ravel()
        if self.J < 1:
            raise ConfigError("neighbor count J must be >= 1")
        if self.n_synthetic < 0:
            raise ConfigError("n_synthetic must be >= 0")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise ConfigError("sigma2 must be positive")
        if self.M < 0:
            raise ConfigError("neighbor weight M must be >= 0")
        if self.kernel_sigma2 is not None and self.kernel_sigma2 <= 0:
            raise ConfigError("kernel_sigma2 must be positive")


def proximity_weight(x_star: np.ndarray, z: np.ndarray, kernel_sigma2: float) -> float:
    """exp(-||x_star - z||^2 / kernel_sigma2)."""
    diff = np.asarray(x_star, dtype=np.float64) - np.asarray(z, dtype=np.float64)
    return float(np.exp(-np.dot(diff, diff) / kernel_sigma2))


def build_locale(table: IOTable, params: SlimeParams, rng,
                 model: Callable[[np.ndarray], np.ndarray] | None = None) -> IOTable:
    """Assemble the weighted locale dataset around ``params.x_star``.

    Neighbors come from the table (Euclidean nearest, ties by original row
    index) with weight M. Synthetic rows are sampled coordinate-wise
    Gaussian around x_star and labeled by the ``model`` callback, weighted
    by the proximity kernel.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    x_star = params.x_star
    if x_star.shape != (table.d,):
        raise ConfigError(
            f"x_star has {x_star.shape[0]} coordinates, table has {table.d} inputs"
        )
    if params.J > table.n:
        raise DataError(f"J={params.J} neighbors requested from {table.n} rows")
    if params.n_synthetic > 0 and model is None:
        raise ConfigError("synthetic samples require a model callback")

    dists = np.linalg.norm(table.X - x_star, axis=1)
    nbr_idx = np.argsort(dists, kind="stable")[: params.J]
    Xn = table.X[nbr_idx]
    Yn = table.Y[nbr_idx]
    wn = np.full(params.J, params.M, dtype=np.float64)

    if params.n_synthetic == 0:
        return IOTable(list(table.input_names), list(table.output_names),
                       Xn, Yn, weights=wn)

    if params.sigma2 is not None:
        sigma2 = np.full(table.d, params.sigma2, dtype=np.float64)
    else:
        if params.J < 2:
            raise ConfigError("default sigma2 needs J >= 2 neighbors")
        sigma2 = 0.5 * np.var(Xn, axis=0, ddof=1)
    kernel_sigma2 = params.kernel_sigma2
    if kernel_sigma2 is None:
        kernel_sigma2 = float(np.mean(sigma2))
    if kernel_sigma2 <= 0:
        raise ConfigError(
            "degenerate locale: neighbor variance is zero, pass sigma2 explicitly"
        )

    Z = x_star + rng.normal(size=(params.n_synthetic, table.d)) * np.sqrt(sigma2)
    Yz = np.asarray(model(Z), dtype=np.float64)
    if Yz.ndim == 1:
        Yz = Yz.reshape(-1, 1)
    if Yz.shape != (params.n_synthetic, table.n_outputs):
        raise DataError(
            f"model returned shape {Yz.shape}, expected "
            f"({params.n_synthetic}, {table.n_outputs})"
        )
    diffs = Z - x_star
    wz = np.exp(-np.sum(diffs * diffs, axis=1) / kernel_sigma2)
    return IOTable(list(table.input_names), list(table.output_names),
                   np.vstack([Xn, Z]), np.vstack([Yn, Yz]),
                   weights=np.concatenate([wn, wz]))


def slime_fit(locale: IOTable, config: SRConfig,
              n_threads: int = 1) -> FitResult:
    """Search on the locale under the weight-normalized data loss."""
    start = time.perf_counter()
    weights = locale.weights
    if weights is None:
        weights = np.ones(locale.n, dtype=np.float64)
    if not weights.any():
        raise DataError("locale weights are all zero")
    fronts = []
    best_indices = []
    for j in range(locale.n_outputs):
        cfg_j = replace(config, seed=config.seed + j)
        front, _stats = evolve(locale.X, locale.Y[:, j], cfg_j,
                               var_names=locale.input_names, weights=weights,
                               n_threads=n_threads)
        fronts.append(front)
        best_indices.append(select_best(front))
    return FitResult(fronts=fronts, best_indices=best_indices,
                     wall_time=time.perf_counter() - start,
                     config=config, seed=config.seed)
