"""Least-squares fitting, the F-test gate, and the incomplete beta function."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special, stats

from calr.dataset import Dataset
from calr.exceptions import DimensionMismatchError, InputError
from calr.linreg import (
    LinearModel,
    coefficient_distance,
    f_test_pvalue,
    lr,
    mse,
    predict_linear,
    regularized_incomplete_beta,
)


def solve_normal_equations(X, y):
    """Independent oracle: Gauss-Jordan elimination on the normal equations."""
    n = len(X)
    A = np.concatenate([np.ones((n, 1)), np.asarray(X, dtype=float)], axis=1)
    k = A.shape[1]
    M = np.concatenate([A.T @ A, (A.T @ y)[:, None]], axis=1)
    for col in range(k):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        M[[col, piv]] = M[[piv, col]]
        M[col] = M[col] / M[col, col]
        for r in range(k):
            if r != col:
                M[r] = M[r] - M[r, col] * M[col]
    return M[:, -1]


def _random_dataset(rng, n, d):
    X = rng.uniform(-5.0, 5.0, size=(n, d))
    beta = rng.uniform(-3.0, 3.0, size=d + 1)
    y = beta[0] + X @ beta[1:] + rng.normal(0.0, 0.5, size=n)
    return Dataset(X=X, y=y)


def test_exact_line_is_interpolated():
    X = np.arange(5.0)[:, None]
    data = Dataset(X=X, y=2.0 * X[:, 0] + 1.0)
    model = lr(data)
    assert_allclose(model.coeffs, [1.0, 2.0], atol=1e-12)
    assert model.mse <= 1e-24


def test_hand_worked_three_point_fit():
    data = Dataset(X=np.array([[0.0], [1.0], [2.0]]), y=np.array([0.0, 1.0, 1.0]))
    model = lr(data)
    assert_allclose(model.coeffs, [1.0 / 6.0, 0.5], atol=1e-12)


def test_single_point_minimum_norm():
    data = Dataset(X=np.array([[1.0, 1.0]]), y=np.array([5.0]))
    model = lr(data)
    assert abs(model.predict(np.array([1.0, 1.0])) - 5.0) <= 1e-9
    assert model.mse <= 1e-18
    # Minimum-norm solutions lie in the row space of the design matrix.
    A = np.array([[1.0, 1.0, 1.0]])
    expected = A.T @ np.linalg.solve(A @ A.T, np.array([5.0]))
    assert_allclose(model.coeffs, expected, atol=1e-12)


def test_matches_normal_equations_oracle():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(8, 51))
        d = int(rng.integers(1, 5))
        data = _random_dataset(rng, n, d)
        model = lr(data)
        oracle = solve_normal_equations(data.X, data.y)
        assert_allclose(model.coeffs, oracle, rtol=1e-8, atol=1e-10)
        A = np.concatenate([np.ones((n, 1)), data.X], axis=1)
        resid = data.y - A @ model.coeffs
        lhs = np.max(np.abs(A.T @ resid))
        rhs = 1e-8 * max(1.0, float(np.max(np.abs(A.T @ data.y))))
        assert lhs <= rhs


def test_predict_linear_values():
    assert predict_linear(LinearModel(coeffs=np.array([1.0, 2.0])), np.array([3.0])) == 7.0
    zero = LinearModel(coeffs=np.zeros(4))
    assert predict_linear(zero, np.array([9.0, -2.0, 4.0])) == 0.0
    ones = LinearModel(coeffs=np.array([1.0, 1.0, 1.0]))
    assert predict_linear(ones, np.array([2.0, 3.0])) == 6.0
    with pytest.raises(DimensionMismatchError):
        predict_linear(ones, np.array([2.0]))


def test_mse_values_and_oracle():
    X = np.array([[0.0], [1.0]])
    perfect = Dataset(X=X, y=np.array([1.0, 3.0]))
    assert mse(lr(perfect), perfect) <= 1e-24
    zero = LinearModel(coeffs=np.array([0.0, 0.0]))
    sym = Dataset(X=np.array([[2.0], [2.0]]), y=np.array([1.0, -1.0]))
    assert mse(zero, sym) == 1.0
    rng = np.random.default_rng(5)
    data = _random_dataset(rng, 40, 3)
    model = lr(data)
    total = 0.0
    for i in range(data.n):
        r = data.y[i] - model.predict(data.X[i])
        total += r * r
    assert abs(mse(model, data) - total / data.n) <= 1e-12 * max(1.0, total / data.n)


def test_f_test_edge_branches():
    X = np.arange(10.0)[:, None]
    exact = Dataset(X=X, y=3.0 * X[:, 0] - 1.0)
    assert f_test_pvalue(lr(exact), exact) == 0.0
    flat = Dataset(X=X, y=np.full(10, 2.0))
    assert f_test_pvalue(lr(flat), flat) == 1.0
    tiny = Dataset(X=np.array([[0.0], [1.0]]), y=np.array([0.0, 1.0]))
    with pytest.raises(InputError):
        f_test_pvalue(lr(tiny), tiny)


def test_f_test_matches_frozen_probe():
    rng = np.random.default_rng(42)
    x = np.linspace(0.0, 3.0, 20)
    y = x + rng.normal(0.0, 0.5, size=20)
    data = Dataset(X=x[:, None], y=y)
    p = f_test_pvalue(lr(data), data)
    assert abs(p - 9.057143351984684e-09) <= 1e-8


def test_f_test_matches_f_distribution_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        n = int(rng.integers(10, 40))
        d = int(rng.integers(1, 4))
        data = _random_dataset(rng, n, d)
        model = lr(data)
        pred = model.predict_batch(data.X)
        sse = float(np.sum((data.y - pred) ** 2))
        ssr = float(np.sum((pred - data.y.mean()) ** 2))
        f_stat = (ssr / d) / (sse / (n - d - 1))
        assert abs(f_test_pvalue(model, data) - stats.f.sf(f_stat, d, n - d - 1)) <= 1e-8


def test_perturbing_coefficients_never_improves_mse():
    rng = np.random.default_rng(23)
    for _ in range(3):
        data = _random_dataset(rng, 30, 2)
        model = lr(data)
        base = mse(model, data)
        for j in range(model.coeffs.size):
            for sign in (-1.0, 1.0):
                bumped = model.coeffs.copy()
                bumped[j] += sign * 1e-3
                assert mse(LinearModel(coeffs=bumped), data) >= base


def test_shrinking_residuals_never_raises_pvalue():
    rng = np.random.default_rng(31)
    data = _random_dataset(rng, 25, 2)
    model = lr(data)
    pred = model.predict_batch(data.X)
    last = 1.0
    for t in (1.0, 0.5, 0.25, 0.1, 0.01):
        mixed = Dataset(X=data.X, y=pred + t * (data.y - pred))
        p = f_test_pvalue(model, mixed)
        assert p <= last + 1e-15
        last = p


def test_translation_changes_only_the_intercept():
    rng = np.random.default_rng(37)
    data = _random_dataset(rng, 30, 3)
    shift = rng.uniform(-10.0, 10.0, size=3)
    moved = Dataset(X=data.X + shift, y=data.y)
    assert_allclose(lr(data).coeffs[1:], lr(moved).coeffs[1:], atol=1e-9)


def test_linear_model_validation_and_identity():
    with pytest.raises(InputError):
        LinearModel(coeffs=np.array([np.nan, 1.0]))
    with pytest.raises(InputError):
        LinearModel(coeffs=np.zeros((2, 2)))
    a = LinearModel(coeffs=np.array([1.0, 2.0]), mse=5.0, p_value=0.3, n_fit=9)
    b = LinearModel(coeffs=np.array([1.0, 2.0]))
    assert a == b  # metadata does not participate in identity
    with pytest.raises(DimensionMismatchError):
        coefficient_distance(a, LinearModel(coeffs=np.array([1.0, 2.0, 3.0])))
    c = LinearModel(coeffs=np.array([4.0, 6.0]))
    assert coefficient_distance(a, c) == 5.0


def test_incomplete_beta_spot_values_and_edges():
    frozen = [
        (0.5, 0.5, 0.3, 0.36901011956554536),
        (2.0, 3.0, 0.5, 0.6875),
        (9.0, 0.5, 0.99, 0.6748712326262112),
        (5.0, 5.0, 0.1, 0.00089092),
    ]
    for a, b, x, want in frozen:
        assert abs(regularized_incomplete_beta(a, b, x) - want) <= 1e-10
    assert regularized_incomplete_beta(2.0, 2.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 2.0, 1.0) == 1.0
    with pytest.raises(InputError):
        regularized_incomplete_beta(0.0, 1.0, 0.5)
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = float(rng.uniform(0.2, 20.0))
        b = float(rng.uniform(0.2, 20.0))
        x = float(rng.uniform(0.0, 1.0))
        assert abs(regularized_incomplete_beta(a, b, x) - special.betainc(a, b, x)) <= 1e-10
