"""Dataset containers, CSV round-trips, and the planted-data generator."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from calr.calf import overlapping_training_points
from calr.dataset import Dataset, generate_separable, load_csv, load_matrix, write_csv
from calr.exceptions import (
    CsvFormatError,
    DimensionMismatchError,
    InputError,
    PlacementError,
)
from calr.linreg import coefficient_distance


def test_dataset_defaults_and_validation():
    data = Dataset(X=np.array([[1.0, 2.0], [3.0, 4.0]]), y=np.array([5.0, 6.0]))
    assert data.n == 2 and data.d == 2 and len(data) == 2
    assert data.column_names == ("x1", "x2", "y")
    with pytest.raises(ValueError):
        data.X[0, 0] = 99.0  # stored arrays are read-only
    sub = data.subset([1])
    assert sub.n == 1 and sub.y[0] == 6.0
    assert data == Dataset(X=data.X, y=data.y)
    with pytest.raises(InputError):
        Dataset(X=np.array([1.0, 2.0]), y=np.array([1.0, 2.0]))
    with pytest.raises(DimensionMismatchError):
        Dataset(X=np.zeros((3, 1)), y=np.zeros(2))
    with pytest.raises(InputError):
        Dataset(X=np.array([[np.nan]]), y=np.array([1.0]))
    with pytest.raises(InputError):
        Dataset(X=np.zeros((2, 1)), y=np.zeros(2), column_names=("a", "b", "c"))


def test_csv_round_trip_preserves_every_bit(tmp_path):
    rng = np.random.default_rng(3)
    data = Dataset(X=rng.normal(size=(20, 3)) * 1e3, y=rng.normal(size=20) / 7.0)
    path = tmp_path / "data.csv"
    write_csv(data, path)
    back = load_csv(path)
    assert back == data
    assert_array_equal(back.X, data.X)
    assert_array_equal(back.y, data.y)


def test_csv_target_column_selection(tmp_path):
    path = tmp_path / "named.csv"
    path.write_text("a,b,c\n1,2,3\n4,5,6\n")
    default = load_csv(path)
    assert default.column_names == ("a", "b", "c")
    assert_array_equal(default.y, [3.0, 6.0])
    named = load_csv(path, target_column="a")
    assert named.column_names == ("b", "c", "a")
    assert_array_equal(named.X, [[2.0, 3.0], [5.0, 6.0]])
    assert_array_equal(named.y, [1.0, 4.0])
    with pytest.raises(CsvFormatError):
        load_csv(path, target_column="zz")


def test_csv_format_errors(tmp_path):
    cases = {
        "empty.csv": "",
        "header_only.csv": "a,b\n",
        "one_column.csv": "a\n1\n2\n",
    }
    for name, text in cases.items():
        p = tmp_path / name
        p.write_text(text)
        with pytest.raises(CsvFormatError):
            load_csv(p)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1,2\n3\n")
    with pytest.raises(CsvFormatError) as exc:
        load_csv(ragged)
    assert exc.value.row == 3
    bad_cell = tmp_path / "cell.csv"
    bad_cell.write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(CsvFormatError) as exc:
        load_csv(bad_cell)
    assert exc.value.row == 3 and exc.value.column == 2
    with pytest.raises(InputError):
        load_matrix(tmp_path / "missing.csv")


def test_generator_is_deterministic():
    a_data, a_truth = generate_separable(60, 2, 2, 0.05, 1.0, seed=9)
    b_data, b_truth = generate_separable(60, 2, 2, 0.05, 1.0, seed=9)
    assert a_data.X.tobytes() == b_data.X.tobytes()
    assert a_data.y.tobytes() == b_data.y.tobytes()
    assert a_truth.model == b_truth.model
    assert_array_equal(a_truth.assignments, b_truth.assignments)
    c_data, _ = generate_separable(60, 2, 2, 0.05, 1.0, seed=10)
    assert a_data.y.tobytes() != c_data.y.tobytes()


def test_generator_plants_what_it_reports():
    data, truth = generate_separable(120, 2, 3, 0.1, 0.8, seed=21)
    assert data.n == 120 and data.d == 2
    assert truth.model.m == 3
    # Assignments agree with the areas, with the default clear of all boxes.
    assert_array_equal(truth.model.assign_batch(data.X), truth.assignments)
    assert len(overlapping_training_points(truth.model, data.X)) == 0
    # Every region, including the default, holds at least d + 2 points.
    for k in range(4):
        assert int(np.sum(truth.assignments == k)) >= 4
    # Planted functions are pairwise separated in coefficient space.
    fs = truth.functions
    assert len(fs) == 4
    for i in range(4):
        for j in range(i + 1, 4):
            assert coefficient_distance(fs[i], fs[j]) >= 0.8
    # Residuals against the planted model stay strictly inside the margin.
    resid = np.abs(data.y - truth.model.predict_batch(data.X))
    assert np.all(resid < truth.margin_epsilon)
    assert truth.noise_sigma == 0.1 and truth.separation_delta == 0.8


def test_generator_noise_scale_is_plausible():
    sigma = 0.1
    data, truth = generate_separable(500, 2, 2, sigma, 1.0, seed=33)
    resid = data.y - truth.model.predict_batch(data.X)
    within = np.mean(np.abs(resid) <= 3.0 * sigma)
    assert within >= 0.95
    assert 0.05 <= float(np.std(resid)) <= 0.2
    assert truth.margin_epsilon > float(np.max(np.abs(resid)))


def test_generator_noiseless_is_exact():
    data, truth = generate_separable(50, 1, 2, 0.0, 0.5, seed=4)
    assert_array_equal(data.y, truth.model.predict_batch(data.X))
    assert truth.margin_epsilon == 1e-9


def test_generator_rejects_bad_parameters():
    with pytest.raises(InputError):
        generate_separable(5, 2, 1, 0.1, 1.0, seed=0)  # n < (m+1)(d+2)
    with pytest.raises(InputError):
        generate_separable(50, 2, 1, -0.1, 1.0, seed=0)
    with pytest.raises(InputError):
        generate_separable(50, 2, 1, 0.1, 0.0, seed=0)
    with pytest.raises(PlacementError):
        generate_separable(200, 1, 7, 0.1, 1.0, seed=0)  # only 6 slots on a line
    with pytest.raises(InputError):
        generate_separable(50, 0, 1, 0.1, 1.0, seed=0)
