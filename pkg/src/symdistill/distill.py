"""End-to-end distillation: one search per output dimension, plus the
dimension-importance ranking and cosine-annealed pruning schedule used to
shrink wide blocks before fitting.

Results persist under ``SR_output/<block>/dim_<j>/<UTC timestamp>/`` as a
``front.csv`` (complexity, loss, score, equation) and a ``best.txt`` holding
the selected equation.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, SymDistillError
from .grammar import parse, render
from .search import (
    FitResult,
    ParetoFront,
    SRConfig,
    evolve,
    front_scores,
    select_best,
)
from .table import IOTable


def _timestamp_dir(parent: Path) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    path = parent / stamp
    suffix = 1
    while path.exists():
        path = parent / f"{stamp}-{suffix}"
        suffix += 1
    return path


def save_front(front: ParetoFront, path: Path) -> None:
    """Write complexity,loss,score,equation rows plus best.txt alongside."""
    path.parent.mkdir(parents=True, exist_ok=True)
    scores = front_scores(front)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["complexity", "loss", "score", "equation"])
        for entry, score in zip(front, scores):
            writer.writerow([entry.complexity, f"{entry.loss:.17g}",
                             f"{score:.17g}", render(entry.expr)])


def load_front(path, variables: Sequence[str] | None = None) -> ParetoFront:
    """Read a front.csv back into a ParetoFront (scores are recomputed)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"complexity", "loss", "equation"} <= set(
                reader.fieldnames):
            raise DataError(
                f"{path} needs complexity, loss and equation columns, "
                f"got {reader.fieldnames}"
            )
        front = ParetoFront()
        for row in reader:
            front.insert(int(row["complexity"]), float(row["loss"]),
                         parse(row["equation"], variables=variables))
    if len(front) == 0:
        raise DataError(f"{path} holds no front entries")
    return front


def persist_front(front: ParetoFront, best_index: int, out_dir, block_name: str,
                  dim: int) -> Path:
    """Write one front under SR_output/<block>/dim_<j>/<timestamp>/."""
    run_dir = _timestamp_dir(Path(out_dir) / "SR_output" / block_name / f"dim_{dim}")
    run_dir.mkdir(parents=True, exist_ok=True)
    save_front(front, run_dir / "front.csv")
    (run_dir / "best.txt").write_text(render(front[best_index].expr) + "\n")
    return run_dir


def distill(table: IOTable, config: SRConfig, out_dir,
            block_name: str = "block", n_threads: int = 1) -> FitResult:
    """Fit one Pareto front per output dimension and persist every front.

    Dimension j runs with seed ``config.seed + j`` so adding output
    dimensions never changes earlier dimensions' results.
    """
    start = time.perf_counter()
    fronts: list[ParetoFront] = []
    best_indices: list[int] = []
    for j in range(table.n_outputs):
        cfg_j = replace(config, seed=config.seed + j)
        try:
            front, _stats = evolve(table.X, table.Y[:, j], cfg_j,
                                   var_names=table.input_names,
                                   weights=table.weights, n_threads=n_threads)
        except SymDistillError as exc:
            raise type(exc)(f"output dimension {j}: {exc}") from exc
        best = select_best(front)
        persist_front(front, best, out_dir, block_name, j)
        fronts.append(front)
        best_indices.append(best)
    return FitResult(fronts=fronts, best_indices=best_indices,
                     wall_time=time.perf_counter() - start,
                     config=config, seed=config.seed)


def get_importance(table: IOTable) -> list[tuple[int, float]]:
    """Output dimensions ranked by sample variance, highest first.

    Ties keep the lower dimension index first. Needs at least two rows.
    """
    if table.n < 2:
        raise DataError("importance needs at least 2 rows")
    variances = np.var(table.Y, axis=0, ddof=1)
    order = np.argsort(-variances, kind="stable")
    return [(int(j), float(variances[j])) for j in order]


@dataclass(frozen=True)
class PruneSchedule:
    """Cosine-annealed reduction of active dimensions, finishing at
    ``end_fraction`` of the way through ``total_steps``."""

    total_steps: int
    start_dims: int
    target_dims: int
    end_fraction: float = 0.65

    def __post_init__(self):
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        if not 0.0 < self.end_fraction <= 1.0:
            raise ConfigError("end_fraction must be in (0, 1]")
        if self.target_dims < 0 or self.target_dims > self.start_dims:
            raise ConfigError("need 0 <= target_dims <= start_dims")

    def dims_at(self, step: int) -> int:
        """Number of dimensions kept at a step; start_dims at 0, target_dims
        from end_fraction*total_steps onward."""
        if step < 0 or step > self.total_steps:
            raise ConfigError(
                f"step {step} outside [0, {self.total_steps}]"
            )
        ratio = min(step / (self.end_fraction * self.total_steps), 1.0)
        span = self.start_dims - self.target_dims
        return self.target_dims + int(np.floor(span * (1.0 + np.cos(np.pi * ratio)) / 2.0 + 0.5))


def prune_mask(schedule: PruneSchedule, step: int, importance_ranking) -> np.ndarray:
    """Boolean keep-mask over dimensions: the top-k of the ranking for the
    schedule's k at this step. Once a dimension is masked it stays masked as
    the step increases (k is monotone and the ranking is fixed)."""
    ranking = [int(e[0]) if isinstance(e, (tuple, list)) else int(e)
               for e in importance_ranking]
    k = schedule.dims_at(step)
    mask = np.zeros(len(ranking), dtype=bool)
    for dim in ranking[:k]:
        mask[dim] = True
    return mask
