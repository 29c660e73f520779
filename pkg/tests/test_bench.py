import numpy as np
import pytest

from symdistill import (
    ConfigError,
    ForceLaw,
    eval_batch,
    gen_heat,
    gen_pairwise,
    parse,
)
from symdistill.bench import force_components, heat_profile

PAIR_NAMES = ["dx", "dy", "r", "m1", "m2", "q1", "q2"]


def test_spring_zero_at_unit_separation():
    fx, fy = force_components(ForceLaw("spring", softening=0.0),
                              dx=0.6, dy=0.8, r=1.0, m1=1, m2=1, q1=0, q2=0)
    assert fx == 0.0 and fy == 0.0


def test_inv_r2_formula_oracle():
    fx, _ = force_components(ForceLaw("inv_r2", softening=0.0),
                             dx=3.0, dy=4.0, r=5.0, m1=1.0, m2=2.0, q1=0, q2=0)
    assert fx == pytest.approx(2.0 * 3.0 / 125.0)


def test_charge_antisymmetry():
    t = gen_pairwise(ForceLaw("charge"), 200, np.random.default_rng(0))
    flipped = t.X.copy()
    flipped[:, 5] *= -1.0  # q1
    fx, fy = force_components(ForceLaw("charge"), flipped[:, 0], flipped[:, 1],
                              flipped[:, 2], flipped[:, 3], flipped[:, 4],
                              flipped[:, 5], flipped[:, 6])
    assert fx == pytest.approx(-t.Y[:, 0])
    assert fy == pytest.approx(-t.Y[:, 1])


def test_same_seed_identical_tables():
    for law in ("spring", "inv_r", "inv_r2", "charge"):
        a = gen_pairwise(ForceLaw(law), 500, np.random.default_rng(42))
        b = gen_pairwise(ForceLaw(law), 500, np.random.default_rng(42))
        assert a.X.tobytes() == b.X.tobytes()
        assert a.Y.tobytes() == b.Y.tobytes()
    h1 = gen_heat(500, 0.2, 7)
    h2 = gen_heat(500, 0.2, 7)
    assert h1.X.tobytes() == h2.X.tobytes()
    assert h1.Y.tobytes() == h2.Y.tobytes()


def test_sampling_constraints():
    t = gen_pairwise(ForceLaw("charge"), 3000, np.random.default_rng(1))
    dx, dy, r, m1, m2, q1, q2 = t.X.T
    assert np.all(np.hypot(dx, dy) >= 0.1)
    assert np.all(r >= 0.1 + 1e-2)
    assert np.all((m1 >= 0.5) & (m1 <= 2.0) & (m2 >= 0.5) & (m2 <= 2.0))
    assert np.all((np.abs(q1) >= 0.1) & (np.abs(q1) <= 1.0))
    assert np.all(np.isfinite(t.Y))


def test_forces_match_expression_reevaluation():
    # rebuild each law as a parsed expression and compare to 1e-12
    formulas = {
        "spring": ("((inv(r) + -1.0) * dx)", "((inv(r) + -1.0) * dy)"),
        "inv_r": ("(dx * inv((r * r)))", "(dy * inv((r * r)))"),
        "inv_r2": ("((m2 * dx) * inv(((r * r) * r)))",
                   "((m2 * dy) * inv(((r * r) * r)))"),
        "charge": ("(((q1 * q2) * dx) * inv(((r * r) * r)))",
                   "(((q1 * q2) * dy) * inv(((r * r) * r)))"),
    }
    for law, (fx_text, fy_text) in formulas.items():
        t = gen_pairwise(ForceLaw(law), 400, np.random.default_rng(3))
        fx = eval_batch(parse(fx_text, variables=PAIR_NAMES), t.X)
        fy = eval_batch(parse(fy_text, variables=PAIR_NAMES), t.X)
        assert np.abs(fx - t.Y[:, 0]).max() <= 1e-12
        assert np.abs(fy - t.Y[:, 1]).max() <= 1e-12


def test_heat_boundary_and_initial_conditions():
    assert heat_profile(0.0, 0.37, 0.2) == pytest.approx(0.0, abs=1e-15)
    assert heat_profile(1.0, 0.9, 0.2) == pytest.approx(0.0, abs=1e-12)
    assert heat_profile(0.5, 0.0, 0.2) == pytest.approx(1.0)


def test_heat_decay_value():
    assert heat_profile(0.5, 1.0, 0.2) == pytest.approx(np.exp(-0.2 * np.pi**2))
    assert heat_profile(0.5, 1.0, 0.2) == pytest.approx(0.13891, abs=5e-6)


def test_heat_table_matches_closed_form():
    t = gen_heat(1000, 0.2, np.random.default_rng(5))
    assert np.all((t.X >= 0) & (t.X <= 1))
    u = heat_profile(t.X[:, 0], t.X[:, 1], 0.2)
    assert np.array_equal(u, t.Y[:, 0])


def test_generator_validation():
    with pytest.raises(ConfigError):
        ForceLaw("magnet")
    with pytest.raises(ConfigError):
        gen_heat(0, 0.2, 0)
    with pytest.raises(ConfigError):
        gen_heat(10, -1.0, 0)
    with pytest.raises(ConfigError):
        gen_pairwise(ForceLaw("spring"), 0, 0)
