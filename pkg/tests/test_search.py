import numpy as np
import pytest

from symdistill import (
    ConfigError,
    DataError,
    ParetoFront,
    SRConfig,
    accept,
    crossover,
    evolve,
    front_scores,
    mutate,
    operator_set,
    optimize_constants,
    parse,
    penalized_loss,
    render,
    select_best,
    tournament_select,
)
from symdistill.expr import Apply, Constant, Expression, Variable, eval_batch, iter_nodes
from symdistill.search import Individual, check_constraints

OPS = operator_set(["+", "*", "inv", "sin", "exp"])


def _inds(losses):
    return [Individual(Expression(Constant(float(i))), l, l, 1)
            for i, l in enumerate(losses)]


# -- penalized loss ----------------------------------------------------------

def test_penalized_loss_exact_constant():
    e = parse("0.5")
    X = np.zeros((4, 1))
    y = np.full(4, 0.5)
    assert penalized_loss(e, X, y, 0.0, OPS) == 0.0


def test_penalized_loss_nan_is_inf():
    e = parse("inv(x0)")
    X = np.array([[0.0], [1.0]])
    y = np.zeros(2)
    assert penalized_loss(e, X, y, 0.0, OPS) == float("inf")


def test_penalized_loss_parsimony_term():
    e = parse("(3 * x0)")
    X = np.linspace(1, 2, 10).reshape(-1, 1)
    y = 3.0 * X[:, 0]
    assert penalized_loss(e, X, y, 0.05, OPS) == pytest.approx(0.15)


def test_penalized_loss_empty_rejected():
    with pytest.raises(DataError):
        penalized_loss(parse("x0"), np.zeros((0, 1)), np.zeros(0), 0.0, OPS)


# -- tournament --------------------------------------------------------------

def test_tournament_p1_always_fittest():
    pop = _inds([5.0, 1.0, 3.0])
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert tournament_select(pop, rng, size=3, p=1.0).raw == 1.0


def test_tournament_single_member():
    pop = _inds([2.0])
    assert tournament_select(pop, np.random.default_rng(0), size=2, p=0.9).raw == 2.0


def test_tournament_geometric_rate():
    # fitter of a pair wins with probability p
    pop = _inds([1.0, 2.0])
    rng = np.random.default_rng(42)
    wins = sum(tournament_select(pop, rng, size=2, p=0.9).raw == 1.0
               for _ in range(100_000))
    assert wins / 100_000 == pytest.approx(0.9, abs=0.005)


# -- mutation / crossover ----------------------------------------------------

def test_mutate_constant_perturbation():
    cfg = SRConfig(ops=OPS, seed=0)
    rng = np.random.default_rng(1)
    base = Expression(Constant(2.0))
    seen_other = False
    for _ in range(50):
        out = mutate(base, rng, cfg)
        for n in iter_nodes(out.root):
            if isinstance(n, Constant):
                assert np.isfinite(n.value)
                if n.value != 2.0:
                    seen_other = True
    assert seen_other


def test_mutate_delete_produces_leaf_shapes():
    cfg = SRConfig(ops=OPS, seed=0)
    rng = np.random.default_rng(2)
    base = parse("(sin(x0) + x1)")
    sizes = set()
    for _ in range(300):
        out = mutate(base, rng, cfg, n_vars=2)
        sizes.add(sum(1 for _ in iter_nodes(out.root)))
    assert 1 in sizes or 3 in sizes  # a full delete or a subtree collapse


def test_mutate_respects_arg_limits():
    ops = operator_set(["+", "*", "exp"], complexities={"exp": 1},
                       limits={"exp": 3})
    cfg = SRConfig(ops=ops, max_complexity=25, seed=0)
    rng = np.random.default_rng(3)
    e = parse("exp((x0 + x1))", ops=ops)
    for _ in range(10_000):
        e2 = mutate(e, rng, cfg, n_vars=3)
        assert check_constraints(e2, ops, 25)


def test_crossover_leaf_pair_swaps():
    cfg = SRConfig(ops=OPS, seed=0)
    a = Expression(Variable(0, "x0"))
    b = Expression(Constant(1.5))
    ca, cb = crossover(a, b, np.random.default_rng(0), cfg)
    assert {render(ca), render(cb)} == {"x0", "1.5"}


def test_crossover_conserves_leaves():
    cfg = SRConfig(ops=OPS, seed=0)
    rng = np.random.default_rng(4)
    a = parse("((x0 + 1.25) * sin(x1))")
    b = parse("(inv(x1) + (x0 * 2.5))")

    def leaves(e):
        return sorted(
            str(n) for n in iter_nodes(e.root)
            if isinstance(n, (Constant, Variable))
        )

    whole = leaves(a) + leaves(b)
    for _ in range(200):
        ca, cb = crossover(a, b, rng, cfg)
        assert sorted(leaves(ca) + leaves(cb)) == sorted(whole)


def test_crossover_respects_max_complexity():
    cfg = SRConfig(ops=OPS, max_complexity=25, seed=0)
    rng = np.random.default_rng(5)
    a = parse("((x0 + 1.25) * sin((x1 * x0)))")
    b = parse("(inv((x1 + 2.0)) + (x0 * 2.5))")
    for _ in range(10_000):
        ca, cb = crossover(a, b, rng, cfg)
        assert check_constraints(ca, OPS, 25)
        assert check_constraints(cb, OPS, 25)


# -- acceptance --------------------------------------------------------------

def test_accept_improvement_always():
    rng = np.random.default_rng(0)
    assert accept(1.0, 0.5, 0.1, rng)
    assert accept(float("inf"), 1.0, 0.1, rng)


def test_accept_infinite_never():
    rng = np.random.default_rng(0)
    assert not any(accept(1.0, float("inf"), 0.1, rng) for _ in range(1000))


def test_accept_monte_carlo_rate():
    rng = np.random.default_rng(7)
    n = 100_000
    hits = sum(accept(1.0, 1.1, 0.1, rng) for _ in range(n))
    assert hits / n == pytest.approx(np.exp(-1.0), abs=0.01)


# -- constant optimization ---------------------------------------------------

def test_optimize_constants_linear_oracle():
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(200, 1))
    y = 3.0 * X[:, 0]
    # closed-form least squares for c * x0
    oracle = float(np.dot(X[:, 0], y) / np.dot(X[:, 0], X[:, 0]))
    out = optimize_constants(parse("(1.0 * x0)"), X, y, rng=rng)
    c = [n.value for n in iter_nodes(out.root) if isinstance(n, Constant)][0]
    assert c == pytest.approx(oracle, abs=1e-6)
    assert oracle == pytest.approx(3.0, abs=1e-12)


def test_optimize_constants_no_constants_identity():
    e = parse("(x0 + x1)")
    X = np.ones((3, 2))
    assert optimize_constants(e, X, np.ones(3)) is e


def test_optimize_constants_sine_frequency():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 1, size=(400, 1))
    y = np.sin(np.pi * X[:, 0])
    out = optimize_constants(parse("sin((3.0 * x0))"), X, y,
                             rng=np.random.default_rng(2))
    c = [n.value for n in iter_nodes(out.root) if isinstance(n, Constant)][0]
    assert c == pytest.approx(np.pi, abs=1e-3)


def test_optimize_constants_never_worse():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(50, 1))
    y = rng.normal(size=50)
    e = parse("((0.7 * x0) + -0.2)")
    before = penalized_loss(e, X, y, 0.0, OPS)
    after = penalized_loss(optimize_constants(e, X, y, rng=rng), X, y, 0.0, OPS)
    assert after <= before + 1e-15


# -- Pareto front and selection ----------------------------------------------

def test_front_dominance_filtering():
    f = ParetoFront()
    e = Expression(Constant(0.0))
    assert f.insert(5, 0.5, e)
    assert f.insert(3, 0.9, e)
    assert not f.insert(6, 0.6, e)       # dominated
    assert f.insert(4, 0.7, e)
    assert not f.insert(4, 0.7, e)       # exact tie rejected
    assert f.insert(2, 0.2, e)           # dominates everything before it
    cxs = [x.complexity for x in f]
    losses = [x.loss for x in f]
    assert cxs == sorted(cxs) and len(set(cxs)) == len(cxs)
    assert losses == sorted(losses, reverse=True) and len(set(losses)) == len(losses)


def test_front_rejects_nonfinite():
    f = ParetoFront()
    assert not f.insert(3, float("inf"), Expression(Constant(0.0)))
    assert not f.insert(3, float("nan"), Expression(Constant(0.0)))


def test_select_best_two_entry_tie_prefers_simpler():
    f = ParetoFront()
    e = Expression(Constant(0.0))
    f.insert(1, 0.5, e)
    f.insert(5, 0.5 - 1e-18, e)  # effectively equal losses
    assert select_best(f) == 0


def test_select_best_scale_invariance():
    e = Expression(Constant(0.0))
    losses = [0.9, 0.5, 0.2, 0.19]
    cxs = [1, 3, 6, 10]
    f1, f2 = ParetoFront(), ParetoFront()
    for c, l in zip(cxs, losses):
        f1.insert(c, l, e)
        f2.insert(c, l * 1234.5, e)
    assert select_best(f1) == select_best(f2)
    assert front_scores(f1) == pytest.approx(front_scores(f2))


def test_select_best_on_published_front():
    cxs = [1, 5, 7, 8, 9, 10, 12, 14, 16, 18, 20]
    losses = [0.0888, 0.0885, 0.0882, 0.0880, 0.0877, 0.0843, 0.0687,
              0.0513, 0.0260, 0.0128, 0.0125]
    f = ParetoFront()
    for c, l in zip(cxs, losses):
        f.insert(c, l, Expression(Constant(0.0)))
    best = select_best(f)
    assert f[best].complexity == 18
    assert front_scores(f)[best] == pytest.approx(-np.log(0.0128 / 0.0260) / 2)


# -- evolve ------------------------------------------------------------------

def test_evolve_constant_target():
    X = np.random.default_rng(0).uniform(-1, 1, size=(100, 1))
    y = np.full(100, 0.08)
    front, _ = evolve(X, y, SRConfig(n_iterations=20, seed=2))
    entry = front[0]
    assert entry.complexity == 1
    assert entry.loss < 1e-12
    assert abs(float(render(entry.expr)) - 0.08) < 1e-6


def test_evolve_linear_target():
    X = np.random.default_rng(1).uniform(-3, 3, size=(500, 1))
    y = 2.0 * X[:, 0]
    front, _ = evolve(X, y, SRConfig(ops=operator_set(["+", "*"]),
                                     n_iterations=50, seed=1))
    assert any(e.loss < 1e-10 and e.complexity <= 3 for e in front)


def test_evolve_rejects_nonfinite_targets():
    X = np.zeros((3, 1))
    with pytest.raises(DataError, match="non-finite"):
        evolve(X, np.array([1.0, np.nan, 2.0]), SRConfig(n_iterations=1))


def test_evolve_deterministic_and_thread_invariant():
    rng = np.random.default_rng(3)
    X = rng.uniform(-2, 2, size=(300, 2))
    y = X[:, 0] + 0.5 * X[:, 1]
    cfg = SRConfig(n_iterations=30, seed=11)
    sig = lambda fr: [(e.complexity, e.loss, render(e.expr)) for e in fr]
    f1, s1 = evolve(X, y, cfg)
    f2, s2 = evolve(X, y, cfg)
    f3, s3 = evolve(X, y, cfg, n_threads=4)
    assert sig(f1) == sig(f2) == sig(f3)
    assert s1.best_history == s2.best_history == s3.best_history


def test_evolve_history_nonincreasing():
    rng = np.random.default_rng(4)
    X = rng.uniform(-2, 2, size=(200, 1))
    y = np.sin(X[:, 0])
    _, stats = evolve(X, y, SRConfig(n_iterations=40, seed=5))
    hist = stats.best_history
    assert all(a >= b for a, b in zip(hist, hist[1:]))


def test_evolve_front_respects_limits():
    ops = operator_set(["+", "*", "exp"], limits={"exp": 3})
    cfg = SRConfig(ops=ops, n_iterations=25, max_complexity=10, seed=6)
    rng = np.random.default_rng(6)
    X = rng.uniform(0, 1, size=(150, 1))
    y = np.exp(2.0 * X[:, 0])
    front, _ = evolve(X, y, cfg)
    for e in front:
        assert check_constraints(e.expr, ops, 10)


def test_config_validation():
    with pytest.raises(ConfigError):
        SRConfig(population_size=1)
    with pytest.raises(ConfigError):
        SRConfig(tournament_p=0.0)
    with pytest.raises(ConfigError):
        SRConfig(max_complexity=2)
    with pytest.raises(ConfigError):
        SRConfig(acceptance_temperature=0.0)
    with pytest.raises(ConfigError):
        SRConfig(loss_metric="rmse")
