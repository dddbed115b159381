import math

import numpy as np
import pytest

from benn.datagen import (Dataset, gen_linear, gen_model_d, load_csv, save_csv, split,
                          standardize, true_predictors_d)
from benn.errors import ParameterError, ParseError


def test_truth_zero_row():
    np.testing.assert_array_equal(true_predictors_d(np.zeros((1, 6))), [[0.0, 0.0]])


def test_truth_hand_arithmetic():
    X = np.zeros((2, 4))
    X[0, :2] = 5.0
    X[1, 2:] = 5.0
    f = true_predictors_d(X)
    assert f[0, 0] == pytest.approx(25.0, abs=1e-12) and f[0, 1] == 0.0
    assert f[1, 1] == pytest.approx(25.0, abs=1e-12) and f[1, 0] == 0.0


def test_model_d_zero_row_gives_zero_response():
    ds = gen_model_d(5, p=4, seed=0)
    y = ds.truth[:, 0] + ds.truth[:, 1] * 1.7
    assert y.shape == (5,)
    f = true_predictors_d(np.zeros((1, 4)))
    assert f[0, 0] + f[0, 1] * 123.0 == 0.0


def test_model_d_moments():
    n = 20000
    ds = gen_model_d(n, p=6, seed=2)
    tol = 3 * math.sqrt(0.5 / n)
    assert np.all(np.abs(ds.X.mean(axis=0) - 0.2) < tol)
    # var of the sample variance is about 2 sigma^4 / n
    assert np.all(np.abs(ds.X.var(axis=0, ddof=1) - 0.5) < 4 * math.sqrt(2 * 0.25 / n))
    resid = (ds.y - ds.truth[:, 0]) / ds.truth[:, 1]
    assert abs(resid.mean()) < 0.05 and abs(resid.std() - 1) < 0.05


def test_model_d_needs_four_predictors():
    with pytest.raises(ParameterError):
        gen_model_d(10, p=3)


def test_model_d_deterministic():
    a, b = gen_model_d(30, 8, seed=4), gen_model_d(30, 8, seed=4)
    assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()


def test_linear_noiseless_forced_basis():
    e1 = np.eye(5)[:, :1]
    ds = gen_linear(50, 5, 1, noise_sd=0.0, seed=0, basis=e1)
    np.testing.assert_array_equal(ds.y, np.sin(ds.X[:, 0]))
    np.testing.assert_array_equal(ds.truth_basis, e1)


def test_linear_basis_orthonormal():
    ds = gen_linear(10, 7, 3, seed=1)
    B = ds.truth_basis
    np.testing.assert_allclose(B.T @ B, np.eye(3), atol=1e-12)


def test_csv_handwritten(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("x1,x2,y\n1.5,2,3\n-4,0.25,6e-1\n")
    ds = load_csv(path)
    np.testing.assert_array_equal(ds.X, [[1.5, 2.0], [-4.0, 0.25]])
    np.testing.assert_array_equal(ds.y, [3.0, 0.6])
    assert ds.truth is None


def test_csv_round_trip_exact(tmp_path):
    ds = gen_model_d(25, 5, seed=9)
    path = tmp_path / "d.csv"
    save_csv(ds, path)
    back = load_csv(path)
    assert back.X.tobytes() == ds.X.tobytes()
    assert back.y.tobytes() == ds.y.tobytes()
    assert back.truth.tobytes() == ds.truth.tobytes()
    assert back.meta == ds.meta


@pytest.mark.parametrize("text,needle", [
    ("x1,x2\n1,2\n", "y"),
    ("x1,y\n1,2\n3\n", "row 3"),
    ("x1,y\n1,abc\n", "column 'y'"),
])
def test_csv_errors(tmp_path, text, needle):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert needle in str(info.value)


def test_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def test_split_sizes():
    ds = Dataset(np.zeros((21263, 1)), np.arange(21263.0))
    train, test = split(ds, 1 / 3, seed=0)
    assert test.n == 7087 and train.n == 21263 - 7087
    assert set(train.y).isdisjoint(test.y)
    with pytest.raises(ParameterError):
        split(ds, 1.0)


def test_standardize_uses_train_stats():
    rng = np.random.default_rng(0)
    train = Dataset(rng.normal(3, 2, size=(100, 2)), rng.normal(size=100))
    test = Dataset(rng.normal(3, 2, size=(10, 2)), rng.normal(size=10))
    tr, te, tf = standardize(train, test)
    np.testing.assert_allclose(tr.X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(tr.X.std(axis=0), 1)
    np.testing.assert_allclose(te.X, (test.X - train.X.mean(axis=0)) / train.X.std(axis=0))


def test_standardize_constant_column():
    X = np.column_stack([np.full(5, 4.0), np.arange(5.0)])
    with pytest.warns(RuntimeWarning):
        tr, _, tf = standardize(Dataset(X, np.arange(5.0)))
    assert tf.constant == (0,)
    np.testing.assert_array_equal(tr.X[:, 0], 4.0)


def test_dataset_rejects_nonfinite():
    with pytest.raises(ParameterError):
        Dataset(np.array([[np.nan]]), [1.0])
