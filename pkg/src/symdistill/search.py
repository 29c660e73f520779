"""Multi-population evolutionary search over expression trees.

Each population evolves independently under its own RNG stream; populations
exchange hall-of-fame members at fixed migration barriers. Results depend
only on the seed, never on thread scheduling.
"""

from __future__ import annotations

import time
from bisect import insort
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, DataError
from .expr import (
    Apply,
    Constant,
    Expression,
    Node,
    Variable,
    _node_complexity,
    complexity,
    constant_values,
    eval_batch,
    iter_nodes,
    simplify,
    substitute_constants,
)
from .operators import OperatorSet, catalog_set, default_operator_set

LOSS_FLOOR = 1e-15  # floor applied to losses inside the selection score
_EPS = 1e-12


@dataclass
class SRConfig:
    """Search configuration; defaults follow the library's standard setup."""

    ops: OperatorSet = field(default_factory=default_operator_set)
    n_populations: int = 8
    population_size: int = 50
    n_iterations: int = 400
    tournament_size: int = 2
    tournament_p: float = 0.9
    parsimony: float = 0.0
    max_complexity: int = 25
    migration_interval: int = 10
    migration_fraction: float = 0.1
    constant_opt_interval: int = 1
    acceptance_temperature: float = 0.1
    seed: int = 0
    loss_metric: str = "mse"
    crossover_prob: float = 0.25
    # fitness during evolution uses a fixed random subsample of at most this
    # many rows (None = all rows); the returned front is always re-evaluated
    # and constant-polished on the full dataset
    subsample: int | None = 2048
    # tournament/acceptance fitness: raw data loss by default. An additive
    # parsimony penalty at realistic settings outweighs any accuracy gain
    # from needed-but-larger candidates and stalls the search; the front and
    # penalized_loss still report the penalty.
    fitness_uses_penalty: bool = False

    def __post_init__(self):
        if self.n_populations < 1:
            raise ConfigError("n_populations must be >= 1")
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if self.n_iterations < 1:
            raise ConfigError("n_iterations must be >= 1")
        if self.tournament_size < 2:
            raise ConfigError("tournament_size must be >= 2")
        if not 0.0 < self.tournament_p <= 1.0:
            raise ConfigError("tournament_p must be in (0, 1]")
        if self.parsimony < 0.0:
            raise ConfigError("parsimony must be >= 0")
        if self.max_complexity < 3:
            raise ConfigError("max_complexity must be >= 3")
        if self.migration_interval < 1:
            raise ConfigError("migration_interval must be >= 1")
        if not 0.0 <= self.migration_fraction <= 1.0:
            raise ConfigError("migration_fraction must be in [0, 1]")
        if self.constant_opt_interval < 1:
            raise ConfigError("constant_opt_interval must be >= 1")
        if self.acceptance_temperature <= 0.0:
            raise ConfigError("acceptance_temperature must be > 0")
        if self.loss_metric not in ("mse", "mae"):
            raise ConfigError(f"unknown loss_metric {self.loss_metric!r}")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigError("crossover_prob must be in [0, 1]")
        if self.subsample is not None and self.subsample < 2:
            raise ConfigError("subsample must be >= 2 rows or None")


@dataclass(frozen=True)
class ParetoEntry:
    complexity: int
    loss: float
    expr: Expression


class ParetoFront:
    """Dominance-filtered (complexity, loss) staircase, ascending complexity."""

    def __init__(self, entries: Sequence[ParetoEntry] = ()):
        self.entries: list[ParetoEntry] = []
        for e in entries:
            self.insert(e.complexity, e.loss, e.expr)

    def insert(self, cx: int, loss: float, expr: Expression) -> bool:
        """Offer a candidate; returns True when it joins the front."""
        if not np.isfinite(loss):
            return False
        for e in self.entries:
            if e.complexity <= cx and e.loss <= loss:
                return False
        self.entries = [
            e for e in self.entries if not (e.complexity >= cx and e.loss >= loss)
        ]
        insort(self.entries, ParetoEntry(cx, float(loss), expr),
               key=lambda e: e.complexity)
        return True

    def merge(self, other: "ParetoFront") -> None:
        for e in other.entries:
            self.insert(e.complexity, e.loss, e.expr)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


def scores_for(complexities: Sequence[int], losses: Sequence[float]) -> list[float]:
    """Selection scores for consecutive (complexity, loss) rows: fractional
    log-loss drop per added complexity unit. The first row scores 0."""
    if len(complexities) != len(losses):
        raise DataError("complexities and losses differ in length")
    scores = [0.0] if complexities else []
    for j in range(1, len(complexities)):
        lj = max(losses[j], LOSS_FLOOR)
        lp = max(losses[j - 1], LOSS_FLOOR)
        dc = complexities[j] - complexities[j - 1]
        scores.append(-float(np.log(lj / lp)) / dc)
    return scores


def best_of(complexities: Sequence[int], losses: Sequence[float]) -> int:
    """Argmax of the selection score, ties broken toward lower complexity."""
    scores = scores_for(complexities, losses)
    if not scores:
        raise DataError("cannot select from an empty front")
    best = 0
    for j, s in enumerate(scores):
        if s > scores[best]:
            best = j
    return best


def front_scores(front: ParetoFront) -> list[float]:
    """Per-entry selection scores of a front."""
    return scores_for([e.complexity for e in front], [e.loss for e in front])


def select_best(front: ParetoFront) -> int:
    """Index of the best front entry per the selection score."""
    return best_of([e.complexity for e in front], [e.loss for e in front])


@dataclass
class FitResult:
    fronts: list[ParetoFront]
    best_indices: list[int]
    wall_time: float
    config: SRConfig
    seed: int


@dataclass
class EvolveStats:
    n_evaluations: int
    best_history: list[float]
    wall_time: float


@dataclass
class Individual:
    expr: Expression
    raw: float  # data loss
    pen: float  # data loss + parsimony * complexity
    cx: int


def data_loss(expr: Expression, X, y, metric: str = "mse",
              weights: np.ndarray | None = None) -> float:
    """Mean data loss; any NaN prediction makes it +inf."""
    pred = eval_batch(expr, X)
    if np.isnan(pred).any():
        return float("inf")
    with np.errstate(all="ignore"):
        r = pred - y
        e = np.abs(r) if metric == "mae" else r * r
        if weights is None:
            loss = float(np.sum(e) / e.shape[0])
        else:
            loss = float(np.sum(weights * e) / np.sum(weights))
    return loss if np.isfinite(loss) else float("inf")


def penalized_loss(expr: Expression, X, y, parsimony: float = 0.0,
                   ops: OperatorSet | None = None, metric: str = "mse",
                   weights: np.ndarray | None = None) -> float:
    """Data loss plus parsimony times weighted complexity."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError(f"X must be a nonempty 2-D matrix, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if ops is None:
        ops = catalog_set()
    raw = data_loss(expr, X, y, metric, weights)
    return raw + parsimony * complexity(expr, ops)


# ---------------------------------------------------------------------------
# Tree editing


def _paths(node: Node, prefix: tuple = ()) -> list[tuple[tuple, Node]]:
    out = [(prefix, node)]
    if isinstance(node, Apply):
        for i, c in enumerate(node.children):
            out.extend(_paths(c, prefix + (i,)))
    return out


def _replace_at(node: Node, path: tuple, new: Node) -> Node:
    if not path:
        return new
    children = list(node.children)
    children[path[0]] = _replace_at(children[path[0]], path[1:], new)
    return Apply(node.op, tuple(children))


def check_constraints(expr: Expression, ops: OperatorSet, max_complexity: int) -> bool:
    """True when total and per-argument complexity limits hold."""
    if _node_complexity(expr.root, ops) > max_complexity:
        return False
    for n in iter_nodes(expr.root):
        if isinstance(n, Apply):
            limit = ops.get(n.op.name).arg_complexity_limit
            if limit is not None:
                for c in n.children:
                    if _node_complexity(c, ops) > limit:
                        return False
    return True


def _random_constant(rng) -> Constant:
    return Constant(float(rng.normal() * 2.0))


def _random_leaf(rng, n_vars: int, var_names: Sequence[str]) -> Node:
    if rng.random() < 0.5:
        i = int(rng.integers(n_vars))
        return Variable(i, var_names[i])
    return _random_constant(rng)


def random_expression(rng, ops: OperatorSet, n_vars: int,
                      var_names: Sequence[str] | None = None,
                      max_depth: int = 4, max_complexity: int = 25) -> Expression:
    """A random tree of bounded depth that satisfies the complexity limits."""
    if var_names is None:
        var_names = [f"x{i}" for i in range(n_vars)]
    operators = ops.operators

    def build(depth: int) -> Node:
        if depth >= max_depth or (depth > 0 and rng.random() < 0.3):
            return _random_leaf(rng, n_vars, var_names)
        op = operators[int(rng.integers(len(operators)))]
        return Apply(op, tuple(build(depth + 1) for _ in range(op.arity)))

    for _ in range(32):
        e = Expression(build(0))
        if check_constraints(e, ops, max_complexity):
            return e
    return Expression(_random_leaf(rng, n_vars, var_names))


def _perturb_value(c: float, rng) -> float:
    if c == 0.0:
        return float(rng.normal() * 0.1)
    v = c * float(np.exp(rng.normal() * 0.5))
    return v if np.isfinite(v) else c


_MUTATION_CUMWEIGHTS = (("replace", 0.30), ("insert", 0.60), ("delete", 0.80),
                        ("perturb", 1.00))


def mutate(expr: Expression, rng, config: SRConfig, n_vars: int | None = None,
           var_names: Sequence[str] | None = None,
           pool: OperatorSet | None = None) -> Expression:
    """One structural or constant mutation; the input is returned unchanged
    when no constraint-respecting edit is found within the retry budget.

    ``pool`` restricts which operators new nodes may introduce (complexity
    limits always come from the full config set).
    """
    ops = pool if pool is not None else config.ops
    if n_vars is None:
        idxs = [n.index for n in iter_nodes(expr.root) if isinstance(n, Variable)]
        n_vars = max(idxs) + 1 if idxs else 1
    if var_names is None:
        var_names = [f"x{i}" for i in range(n_vars)]
    root = expr.root
    for _ in range(16):
        u = rng.random()
        kind = next(k for k, cw in _MUTATION_CUMWEIGHTS if u <= cw)
        paths = _paths(root)
        cand_root: Node | None = None
        if kind == "perturb":
            consts = [(p, n) for p, n in paths if isinstance(n, Constant)]
            if not consts:
                continue
            p, node = consts[int(rng.integers(len(consts)))]
            cand_root = _replace_at(root, p, Constant(_perturb_value(node.value, rng)))
        elif kind == "replace":
            p, node = paths[int(rng.integers(len(paths)))]
            if isinstance(node, Apply):
                alts = [o for o in ops if o.arity == node.op.arity and o.name != node.op.name]
                if not alts:
                    continue
                op = alts[int(rng.integers(len(alts)))]
                cand_root = _replace_at(root, p, Apply(op, node.children))
            elif isinstance(node, Variable):
                if n_vars > 1:
                    others = [i for i in range(n_vars) if i != node.index]
                    i = others[int(rng.integers(len(others)))]
                    cand_root = _replace_at(root, p, Variable(i, var_names[i]))
                else:
                    cand_root = _replace_at(root, p, _random_constant(rng))
            else:
                cand_root = _replace_at(root, p, _random_constant(rng))
        elif kind == "insert":
            p, node = paths[int(rng.integers(len(paths)))]
            op = ops.operators[int(rng.integers(len(ops.operators)))]
            if op.arity == 1:
                new: Node = Apply(op, (node,))
            else:
                leaf = _random_leaf(rng, n_vars, var_names)
                if rng.random() < 0.5:
                    new = Apply(op, (node, leaf))
                else:
                    new = Apply(op, (leaf, node))
            cand_root = _replace_at(root, p, new)
        else:  # delete: a subtree collapses to a leaf
            applies = [p for p, n in paths if isinstance(n, Apply)]
            p = applies[int(rng.integers(len(applies)))] if applies else ()
            cand_root = _replace_at(root, p, _random_leaf(rng, n_vars, var_names))
        if cand_root is not None:
            cand = Expression(cand_root)
            if check_constraints(cand, config.ops, config.max_complexity):
                return cand
    return expr


def crossover(a: Expression, b: Expression, rng,
              config: SRConfig) -> tuple[Expression, Expression]:
    """Swap uniformly chosen subtrees; abandoned (parents returned) when no
    constraint-respecting swap is found within the retry budget."""
    paths_a = _paths(a.root)
    paths_b = _paths(b.root)
    for _ in range(16):
        pa, sub_a = paths_a[int(rng.integers(len(paths_a)))]
        pb, sub_b = paths_b[int(rng.integers(len(paths_b)))]
        child_a = Expression(_replace_at(a.root, pa, sub_b))
        child_b = Expression(_replace_at(b.root, pb, sub_a))
        if (check_constraints(child_a, config.ops, config.max_complexity)
                and check_constraints(child_b, config.ops, config.max_complexity)):
            return child_a, child_b
    return a, b


def accept(old_loss: float, new_loss: float, temperature: float, rng) -> bool:
    """Always keep improvements; otherwise keep with probability
    exp(-(new-old) / (temperature * max(old, eps)))."""
    if new_loss <= old_loss:
        return True
    if not np.isfinite(new_loss):
        return False
    prob = np.exp(-(new_loss - old_loss) / (temperature * max(old_loss, _EPS)))
    return bool(rng.random() < prob)


def _tournament_pick(rng, k: int, p: float) -> int:
    for j in range(k - 1):
        if rng.random() < p:
            return j
    return k - 1


def tournament_select(population: Sequence, rng, size: int = 2, p: float = 0.9,
                      key: Callable | None = None):
    """Sample ``size`` members without replacement and pick the j-th fittest
    with probability p*(1-p)^j (the last absorbs the remainder)."""
    if len(population) == 0:
        raise DataError("tournament over an empty population")
    if key is None:
        key = lambda item: item.pen if isinstance(item, Individual) else float(item)
    k = min(size, len(population))
    idx = rng.choice(len(population), size=k, replace=False)
    fits = [key(population[int(i)]) for i in idx]
    order = np.argsort(fits, kind="stable")
    pick = _tournament_pick(rng, k, p)
    return population[int(idx[order[pick]])]


def optimize_constants(expr: Expression, X, y, rng=None,
                       ops: OperatorSet | None = None, parsimony: float = 0.0,
                       metric: str = "mse", weights: np.ndarray | None = None,
                       max_evals: int = 200, restarts: int = 2) -> Expression:
    """Refit the expression's constants with Nelder-Mead.

    Runs one simplex from the current constants plus ``restarts`` runs from
    randomly perturbed starting points, each capped at ``max_evals``
    objective evaluations. Never returns something worse than the input.
    """
    consts = constant_values(expr)
    if not consts:
        return expr
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()

    def objective(vec) -> float:
        if not np.all(np.isfinite(vec)):
            return float("inf")
        return data_loss(substitute_constants(expr, vec), X, y, metric, weights)

    c0 = np.asarray(consts, dtype=np.float64)
    best_v = c0
    best_loss = objective(c0)
    if rng is None:
        rng = np.random.default_rng(0)
    starts = [c0]
    for _ in range(restarts):
        starts.append(c0 * np.exp(rng.normal(0.0, 0.3, c0.shape))
                      + rng.normal(0.0, 1e-3, c0.shape))
    for s in starts:
        res = minimize(objective, s, method="Nelder-Mead",
                       options={"maxfev": max_evals, "xatol": 1e-10,
                                "fatol": 1e-14})
        if np.isfinite(res.fun) and res.fun < best_loss:
            best_v, best_loss = res.x, float(res.fun)
    if np.array_equal(best_v, c0):
        return expr
    return substitute_constants(expr, best_v)


# ---------------------------------------------------------------------------
# Evolution


class _Population:
    def __init__(self, index: int, rng, members: list[Individual],
                 temperature: float = 0.1, pool: OperatorSet | None = None):
        self.index = index
        self.rng = rng
        self.members = members
        self.temperature = temperature
        self.pool = pool
        self.hof = ParetoFront()
        self.n_evaluations = 0
        self.best_history: list[float] = []
        # memoization: trees are immutable and hashable, losses depend only
        # on the (fixed) dataset, so repeat candidates skip re-evaluation
        self.loss_cache: dict[Node, tuple[float, int]] = {}
        self.simplified: set[Node] = set()
        self.tuned: set[Node] = set()
        self.next_slot = 0  # round-robin victim: accepted children replace the oldest member
        self.protected: frozenset[int] = frozenset()

    def reprotect(self) -> None:
        """Shield the population's own complexity-wise best members from
        replacement for the coming round, so lineages survive long enough
        to breed; everything else stays fair game for turnover."""
        best_by_cx: dict[int, int] = {}
        for slot, ind in enumerate(self.members):
            cur = best_by_cx.get(ind.cx)
            if cur is None or ind.raw < self.members[cur].raw:
                best_by_cx[ind.cx] = slot
        keep = sorted(best_by_cx, key=lambda cx: self.members[best_by_cx[cx]].raw)
        limit = max(2, len(self.members) // 5)
        self.protected = frozenset(best_by_cx[cx] for cx in keep[:limit])

    def take_slot(self) -> int:
        n = len(self.members)
        for _ in range(n):
            slot = self.next_slot
            self.next_slot = (self.next_slot + 1) % n
            if slot not in self.protected:
                return slot
        return self.next_slot


def evolve(X, y, config: SRConfig, var_names: Sequence[str] | None = None,
           weights: np.ndarray | None = None,
           n_threads: int = 1) -> tuple[ParetoFront, EvolveStats]:
    """Run the full multi-population search against one target column.

    Returns the dominance-filtered front over everything ever evaluated and
    run statistics. Identical (X, y, config) produce identical fronts
    regardless of ``n_threads``.
    """
    start = time.perf_counter()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[1] < 1:
        raise DataError(f"X must be 2-D with at least one column, got {X.shape}")
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not np.isfinite(y).all():
        raise DataError("targets contain non-finite values")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.shape != y.shape:
            raise DataError(f"weights shape {weights.shape} does not match targets")
        if not np.isfinite(weights).all() or (weights < 0).any():
            raise DataError("weights must be finite and nonnegative")
        if not weights.any():
            raise DataError("weights are all zero")
        if np.all(weights == weights[0]):
            weights = None  # uniform weights reduce exactly to the plain loss
    d = X.shape[1]
    if var_names is None:
        var_names = [f"x{i}" for i in range(d)]
    var_names = list(var_names)
    ops = config.ops
    parsimony = config.parsimony
    metric = config.loss_metric
    base_seed = config.seed & 0xFFFFFFFFFFFFFFFF

    # fitness set: a fixed, seed-determined subsample for large datasets
    if config.subsample is not None and X.shape[0] > config.subsample:
        pick = np.random.default_rng((base_seed ^ 0x5AB5) % 2**64)
        rows = pick.choice(X.shape[0], size=config.subsample, replace=False)
        rows.sort()
        X_fit, y_fit = X[rows], y[rows]
        w_fit = weights[rows] if weights is not None else None
    else:
        X_fit, y_fit, w_fit = X, y, weights

    def evaluate(pop: _Population, expr: Expression) -> Individual:
        cached = pop.loss_cache.get(expr.root)
        if cached is None:
            raw = data_loss(expr, X_fit, y_fit, metric, w_fit)
            cx = complexity(expr, ops)
            pop.n_evaluations += 1
            if len(pop.loss_cache) > 50_000:
                pop.loss_cache.clear()
            pop.loss_cache[expr.root] = (raw, cx)
        else:
            raw, cx = cached
        ind = Individual(expr, raw, raw + parsimony * cx, cx)
        pop.hof.insert(cx, raw, expr)
        return ind

    def fitness(ind: Individual) -> float:
        return ind.pen if config.fitness_uses_penalty else ind.raw

    def pool_for(i: int) -> OperatorSet:
        # heterogeneous islands: most populations use the full vocabulary,
        # but every third drops one unary operator so families that a greedy
        # operator would out-compete still get room to establish
        unary = ops.unary
        if i == 0 or not unary or i % 3 != 2:
            return ops
        dropped = unary[(i // 3) % len(unary)].name
        kept = tuple(op for op in ops.operators if op.name != dropped)
        return OperatorSet(kept)

    def init_population(i: int) -> _Population:
        rng = np.random.default_rng((base_seed + i) % 2**64)
        # temperature ladder: even-indexed populations exploit at the base
        # acceptance temperature, odd-indexed ones run increasingly hot and
        # random-walk across structure families the cold ones then refine
        temperature = config.acceptance_temperature
        if i % 2 == 1:
            temperature = min(temperature * 4.0 ** ((i + 1) // 2), 100.0 * temperature)
        pool = pool_for(i)
        pop = _Population(i, rng, [], temperature, pool)
        seeds: list[Expression] = [Expression(Variable(j, var_names[j])) for j in range(d)]
        seeds.append(Expression(Constant(1.0)))
        # unary building blocks: one op application per variable
        for op in pool.unary:
            for j in range(d):
                e = Expression(Apply(op, (Variable(j, var_names[j]),)))
                if check_constraints(e, ops, config.max_complexity):
                    seeds.append(e)
        while len(seeds) < config.population_size:
            seeds.append(random_expression(rng, pool, d, var_names, 4,
                                           config.max_complexity))
        pop.members = [evaluate(pop, e) for e in seeds[:config.population_size]]
        return pop

    def hof_best(pop: _Population) -> float:
        if not pop.hof.entries:
            return float("inf")
        return min(e.loss + parsimony * e.complexity for e in pop.hof.entries)

    def run_round(pop: _Population, iteration: int) -> None:
        rng = pop.rng
        members = pop.members
        n = len(members)
        pop.reprotect()
        for _ in range(config.population_size):
            k = min(config.tournament_size, n)
            if k == 2:
                i = int(rng.integers(n))
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                if fitness(members[j]) < fitness(members[i]):
                    i, j = j, i
                sorted_idx = [i, j]
            else:
                idx = rng.choice(n, size=k, replace=False)
                fits = [fitness(members[int(i)]) for i in idx]
                order = np.argsort(fits, kind="stable")
                sorted_idx = [int(idx[int(o)]) for o in order]
            w = _tournament_pick(rng, k, config.tournament_p)
            winner = members[sorted_idx[w]]
            if k >= 2 and rng.random() < config.crossover_prob:
                pos = w + 1 if w + 1 < k else 0
                partner = members[sorted_idx[pos]]
                if rng.random() < 0.25:
                    # root join: compose the parents under a binary operator,
                    # the direct route to additive/multiplicative structure
                    op = pop.pool.binary[int(rng.integers(len(pop.pool.binary)))]
                    joined = Expression(Apply(op, (winner.expr.root,
                                                   partner.expr.root)))
                    if check_constraints(joined, ops, config.max_complexity):
                        cand = evaluate(pop, joined)
                        if accept(fitness(winner), fitness(cand),
                                  pop.temperature, rng):
                            members[pop.take_slot()] = cand
                    continue
                child_a, child_b = crossover(winner.expr, partner.expr, rng, config)
                for parent, child in ((winner, child_a), (partner, child_b)):
                    cand = evaluate(pop, child)
                    if accept(fitness(parent), fitness(cand), pop.temperature, rng):
                        members[pop.take_slot()] = cand
            else:
                child = mutate(winner.expr, rng, config, d, var_names, pop.pool)
                cand = evaluate(pop, child)
                if accept(fitness(winner), fitness(cand), pop.temperature, rng):
                    members[pop.take_slot()] = cand
        # keep every front niche productive: mutate a couple of hall-of-fame
        # entries directly, so dominated-but-promising sizes still breed
        for _ in range(2):
            if not pop.hof.entries:
                break
            entry = pop.hof.entries[int(rng.integers(len(pop.hof.entries)))]
            child = mutate(entry.expr, rng, config, d, var_names, pop.pool)
            cand = evaluate(pop, child)
            parent_fit = (entry.loss + parsimony * entry.complexity
                          if config.fitness_uses_penalty else entry.loss)
            if accept(parent_fit, fitness(cand), pop.temperature, rng):
                members[pop.take_slot()] = cand
        # simplification pass: keep rewrites that remain within constraints
        if len(pop.simplified) > 50_000:
            pop.simplified.clear()
        for i, ind in enumerate(members):
            root = ind.expr.root
            if root in pop.simplified:
                continue
            pop.simplified.add(root)
            s = simplify(ind.expr, ops)
            if s.root != root and check_constraints(s, ops, config.max_complexity):
                pop.simplified.add(s.root)
                members[i] = evaluate(pop, s)
        if (iteration + 1) % config.constant_opt_interval == 0:
            if len(pop.tuned) > 50_000:
                pop.tuned.clear()
            order = np.argsort([m.pen for m in members], kind="stable")
            slots = [int(order[0]), int(order[1])]
            for slot in slots:
                ind = members[slot]
                root = ind.expr.root
                if (root in pop.tuned or not np.isfinite(ind.raw)
                        or not constant_values(ind.expr)):
                    continue
                pop.tuned.add(root)
                tuned = optimize_constants(ind.expr, X_fit, y_fit, rng=rng, ops=ops,
                                           metric=metric, weights=w_fit,
                                           max_evals=40, restarts=0)
                if tuned.root != root:
                    pop.tuned.add(tuned.root)
                    cand = evaluate(pop, tuned)
                    if cand.pen <= ind.pen:
                        members[slot] = cand
        pop.best_history.append(hof_best(pop))

    pops = [init_population(i) for i in range(config.n_populations)]

    n_mig = int(round(config.migration_fraction * config.population_size))
    migrating = config.n_populations > 1 and n_mig > 0

    def migrate() -> None:
        # emigrants sample the neighbor's front evenly across complexity
        # levels, so receiving populations get stepping stones of every size
        emigrants = []
        for pop in pops:
            entries = pop.hof.entries
            if len(entries) <= n_mig:
                emigrants.append(list(entries))
            else:
                picks = np.linspace(0, len(entries) - 1, n_mig).round().astype(int)
                emigrants.append([entries[int(j)] for j in dict.fromkeys(picks)])
        for i, pop in enumerate(pops):
            incoming = emigrants[(i - 1) % len(pops)]
            if not incoming:
                continue
            order = np.argsort([m.pen for m in pop.members], kind="stable")
            worst_first = [int(j) for j in order[::-1]]
            for slot, entry in zip(worst_first, incoming):
                pop.members[slot] = Individual(
                    entry.expr, entry.loss,
                    entry.loss + parsimony * entry.complexity, entry.complexity)

    executor = ThreadPoolExecutor(max_workers=n_threads) if n_threads > 1 else None
    try:
        for it in range(config.n_iterations):
            if executor is not None:
                list(executor.map(lambda p: run_round(p, it), pops))
            else:
                for pop in pops:
                    run_round(pop, it)
            if migrating and (it + 1) % config.migration_interval == 0:
                migrate()
    finally:
        if executor is not None:
            executor.shutdown()

    merged = ParetoFront()
    for pop in pops:
        merged.merge(pop.hof)

    # final front: full-dataset losses, with one precise constant polish per
    # entry (search-time optimization runs on the fitness subsample only)
    front = ParetoFront()
    polish_rng = np.random.default_rng((base_seed ^ 0x9071) % 2**64)
    n_polish = 0
    for entry in merged:
        full = data_loss(entry.expr, X, y, metric, weights)
        front.insert(entry.complexity, full, entry.expr)
        n_polish += 1
        if constant_values(entry.expr):
            polished = optimize_constants(entry.expr, X, y, rng=polish_rng,
                                          ops=ops, metric=metric, weights=weights,
                                          max_evals=200, restarts=1)
            if polished.root != entry.expr.root:
                full2 = data_loss(polished, X, y, metric, weights)
                front.insert(complexity(polished, ops), full2, polished)
                n_polish += 1

    best_history = [min(pop.best_history[t] for pop in pops)
                    for t in range(config.n_iterations)]
    stats = EvolveStats(
        n_evaluations=sum(pop.n_evaluations for pop in pops) + n_polish,
        best_history=best_history,
        wall_time=time.perf_counter() - start,
    )
    return front, stats
