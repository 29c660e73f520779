import numpy as np
import pytest

from symdistill import (
    ConfigError,
    DataError,
    explained_variance_ratio,
    load_pca,
    pca_fit,
    project,
    reconstruct,
    save_pca,
)


def test_rank_one_line():
    ts = np.linspace(-3, 3, 40)
    X = np.column_stack([ts, 2 * ts])
    model = pca_fit(X, 1)
    direction = np.array([1.0, 2.0]) / np.sqrt(5.0)
    assert model.components[0] == pytest.approx(direction, abs=1e-12)
    assert explained_variance_ratio(model) == pytest.approx([1.0])


def test_full_rank_round_trip():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 5))
    model = pca_fit(X, 5)
    R = reconstruct(model, project(model, X))
    assert np.abs(R - X).max() <= 1e-8 * np.linalg.norm(X)


def test_isotropic_ratios():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10_000, 4))
    model = pca_fit(X, 4)
    assert explained_variance_ratio(model) == pytest.approx([0.25] * 4, abs=0.05)


def test_project_mean_row_is_zero():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 3))
    model = pca_fit(X, 2)
    z = project(model, X.mean(axis=0, keepdims=True))
    assert np.abs(z).max() < 1e-12


def test_axis_variance_ratios():
    # sample variances exactly (8/3, 2/3, 0) along the axes
    X = np.array([
        [2.0, 0.0, 0.0],
        [-2.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
    ])
    model = pca_fit(X, 2)
    assert explained_variance_ratio(model) == pytest.approx([0.8, 0.2], abs=1e-10)


def test_reconstruction_error_equals_discarded_variance():
    # oracle: mean squared residual per sample = sum of discarded
    # eigenvalues * (n-1)/n, from the covariance eigendecomposition
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 6)) @ np.diag([3.0, 2.0, 1.5, 1.0, 0.5, 0.1])
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    eigvals = np.sort(np.linalg.eigvalsh(Xc.T @ Xc / (n - 1)))[::-1]
    for k in (1, 3, 5):
        model = pca_fit(X, k)
        R = reconstruct(model, project(model, X))
        mse = float(np.mean(np.sum((X - R) ** 2, axis=1)))
        expected = float(eigvals[k:].sum() * (n - 1) / n)
        assert mse == pytest.approx(expected, rel=1e-6)


def test_reconstruction_error_monotone_in_k():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 6)) * np.array([4, 3, 2, 1, 0.5, 0.2])
    errs = []
    for k in range(1, 7):
        model = pca_fit(X, k)
        R = reconstruct(model, project(model, X))
        errs.append(float(np.sum((X - R) ** 2)))
    assert all(a >= b - 1e-9 for a, b in zip(errs, errs[1:]))


def test_ratios_nonincreasing_and_bounded():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 8))
    model = pca_fit(X, 6)
    r = explained_variance_ratio(model)
    assert np.all(np.diff(r) <= 1e-15)
    assert np.all((r >= 0) & (r <= 1))
    assert r.sum() <= 1 + 1e-12


def test_orthonormal_components():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 7))
    model = pca_fit(X, 4)
    G = model.components @ model.components.T
    assert np.abs(G - np.eye(4)).max() <= 1e-8


def test_projection_roundtrip_in_component_space():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(50, 5))
    model = pca_fit(X, 3)
    Z = rng.normal(size=(10, 3))
    assert np.abs(project(model, reconstruct(model, Z)) - Z).max() <= 1e-10


def test_deterministic_bitwise():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(40, 4))
    m1 = pca_fit(X, 3)
    m2 = pca_fit(X.copy(), 3)
    assert m1.components.tobytes() == m2.components.tobytes()
    assert m1.mean.tobytes() == m2.mean.tobytes()
    assert m1.explained_variance.tobytes() == m2.explained_variance.tobytes()


def test_sign_convention_largest_coordinate_positive():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(60, 5))
    model = pca_fit(X, 5)
    for row in model.components:
        assert row[np.argmax(np.abs(row))] > 0


def test_persistence_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    X = rng.normal(size=(30, 4))
    model = pca_fit(X, 2)
    save_pca(model, tmp_path / "m")
    back = load_pca(tmp_path / "m")
    assert back.mean.tobytes() == model.mean.tobytes()
    assert back.components.tobytes() == model.components.tobytes()
    assert back.explained_variance.tobytes() == model.explained_variance.tobytes()
    assert back.total_variance == model.total_variance


def test_validation_errors():
    with pytest.raises(ConfigError):
        pca_fit(np.zeros((10, 3)), 4)
    with pytest.raises(ConfigError):
        pca_fit(np.zeros((3, 5)), 3)  # k > n-1
    with pytest.raises(DataError):
        pca_fit(np.array([[np.nan, 1.0], [0.0, 2.0]]), 1)
    with pytest.raises(DataError):
        pca_fit(np.zeros((1, 2)), 1)
    model = pca_fit(np.zeros((5, 2)) + np.arange(2), 1)  # zero variance
    with pytest.raises(DataError):
        explained_variance_ratio(model)


def test_shape_mismatches():
    rng = np.random.default_rng(11)
    model = pca_fit(rng.normal(size=(20, 3)), 2)
    with pytest.raises(DataError):
        project(model, rng.normal(size=(5, 4)))
    with pytest.raises(DataError):
        reconstruct(model, rng.normal(size=(5, 3)))
