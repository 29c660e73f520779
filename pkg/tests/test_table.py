import numpy as np
import pytest

from symdistill import (
    DataError,
    IOTable,
    VariableTransform,
    apply_transforms,
    load_table,
    save_table,
)


def _table(n=3):
    rng = np.random.default_rng(5)
    return IOTable(["a", "b"], ["y"], rng.normal(size=(n, 2)), rng.normal(size=(n, 1)))


def test_binary_round_trip_bit_exact(tmp_path):
    t = _table()
    save_table(t, tmp_path / "t")
    back = load_table(tmp_path / "t")
    assert back.X.tobytes() == t.X.tobytes()
    assert back.Y.tobytes() == t.Y.tobytes()
    assert back.input_names == t.input_names
    assert back.output_names == t.output_names


def test_binary_round_trip_awkward_values(tmp_path):
    t = IOTable(["a"], ["y"], np.array([[0.1], [1 / 3], [-1e-300]]),
                np.array([[np.pi], [2.0], [5e300]]))
    save_table(t, tmp_path / "t")
    back = load_table(tmp_path / "t")
    assert back.X.tobytes() == t.X.tobytes()
    assert back.Y.tobytes() == t.Y.tobytes()


def test_csv_load(tmp_path):
    p = tmp_path / "t.csv"
    lines = ["in:x,in:t,out:u"] + [f"{i},{i * 2},{i * 3}" for i in range(10)]
    p.write_text("\n".join(lines) + "\n")
    t = load_table(p)
    assert (t.d, t.n_outputs, t.n) == (2, 1, 10)
    assert t.input_names == ["x", "t"]
    assert t.output_names == ["u"]
    assert t.X[3, 1] == 6.0


def test_csv_round_trip(tmp_path):
    t = _table(7)
    save_table(t, tmp_path / "t.csv")
    back = load_table(tmp_path / "t.csv")
    assert np.array_equal(back.X, t.X)
    assert np.array_equal(back.Y, t.Y)


def test_row_count_mismatch_names_both_counts(tmp_path):
    t = _table(100)
    save_table(t, tmp_path / "t")
    payload = (tmp_path / "t" / "inputs.bin").read_bytes()
    (tmp_path / "t" / "inputs.bin").write_bytes(payload[:-16])  # drop one row
    with pytest.raises(DataError) as err:
        load_table(tmp_path / "t")
    assert "100" in str(err.value) and "99" in str(err.value)


def test_nonfinite_rejected_unless_allowed(tmp_path):
    t = _table()
    t.X[0, 0] = np.nan
    save_table(t, tmp_path / "t")  # already-built table is not revalidated
    with pytest.raises(DataError, match="non-finite"):
        load_table(tmp_path / "t")
    back = load_table(tmp_path / "t", allow_nonfinite=True)
    assert np.isnan(back.X[0, 0])


def test_transform_radius_with_offset():
    t = IOTable(["dx", "dy"], ["f"], np.array([[3.0, 4.0]]), np.array([[0.0]]))
    tr = VariableTransform.from_spec("r=sqrt((dx*dx)+(dy*dy))+0.01", t.input_names)
    out = apply_transforms(t, [tr])
    assert out.input_names == ["dx", "dy", "r"]
    assert out.X[0, 2] == pytest.approx(5.01)


def test_transform_empty_list_identity():
    t = _table()
    out = apply_transforms(t, [])
    assert out.input_names == t.input_names
    assert np.array_equal(out.X, t.X)


def test_transform_never_mutates_input():
    t = _table()
    X0 = t.X.copy()
    tr = VariableTransform.from_spec("c=(a + b)", t.input_names)
    out = apply_transforms(t, [tr], drop=["a"])
    assert np.array_equal(t.X, X0)
    assert t.input_names == ["a", "b"]
    assert out.input_names == ["b", "c"]


def test_transform_strict_nan_lists_rows():
    t = IOTable(["a"], ["y"], np.array([[1.0], [-1.0], [2.0], [-2.0]]),
                np.zeros((4, 1)))
    tr = VariableTransform.from_spec("l=log(a)", t.input_names)
    with pytest.raises(DataError) as err:
        apply_transforms(t, [tr], strict=True)
    msg = str(err.value)
    assert "1" in msg and "3" in msg
    out = apply_transforms(t, [tr], strict=False)
    assert np.isnan(out.X[1, 1])


def test_transform_chained_columns():
    t = IOTable(["x1", "x2"], ["y"], np.array([[5.0, 1.0]]), np.zeros((1, 1)))
    trs = [
        VariableTransform.from_spec("d=(x1 - x2)", ["x1", "x2"]),
        VariableTransform.from_spec("d2=(d * d)", ["x1", "x2", "d"]),
    ]
    out = apply_transforms(t, trs)
    assert out.X[0, 3] == pytest.approx(16.0)


def test_transform_duplicate_name_rejected():
    t = _table()
    tr = VariableTransform.from_spec("a=(a + b)", t.input_names)
    with pytest.raises(DataError, match="already exists"):
        apply_transforms(t, [tr])


def test_drop_unknown_column_rejected():
    t = _table()
    with pytest.raises(DataError, match="unknown"):
        apply_transforms(t, [], drop=["zz"])


def test_weights_sidecar_round_trip(tmp_path):
    t = _table(5)
    t.weights = np.linspace(0.1, 1.0, 5)
    save_table(t, tmp_path / "t")
    back = load_table(tmp_path / "t")
    assert back.weights is not None
    assert back.weights.tobytes() == t.weights.tobytes()


def test_duplicate_names_rejected():
    with pytest.raises(DataError, match="duplicate"):
        IOTable(["a", "a"], ["y"], np.zeros((1, 2)), np.zeros((1, 1)))
