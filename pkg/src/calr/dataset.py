"""Datasets, CSV ingestion, and planted piecewise-linear data generation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .calf import CalfModel
from .exceptions import CsvFormatError, DimensionMismatchError, InputError, PlacementError
from .geometry import ConvexArea, HalfSpace
from .linreg import LinearModel, coefficient_distance

BOX_SIDE = 2.0
GRID_CELLS_PER_AXIS = 6
_COEFF_RANGE = 3.0
_COEFF_RETRIES = 1000
_REJECTION_FACTOR = 1000


@dataclass(eq=False)
class Dataset:
    """n rows of (x in R^d, y in R) with optional column names."""

    X: np.ndarray
    y: np.ndarray
    column_names: tuple = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise InputError("X must be an (n, d) array with d >= 1")
        if y.shape != (X.shape[0],):
            raise DimensionMismatchError("y must have one value per row of X")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise InputError("dataset values must be finite")
        X = X.copy()
        y = y.copy()
        X.setflags(write=False)
        y.setflags(write=False)
        self.X = X
        self.y = y
        if self.column_names is None:
            self.column_names = tuple(f"x{j + 1}" for j in range(X.shape[1])) + ("y",)
        else:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != X.shape[1] + 1:
                raise InputError("need one column name per feature plus the target")
            self.column_names = names

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(X=self.X[idx], y=self.y[idx], column_names=self.column_names)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and self.column_names == other.column_names
        )

    def __len__(self):
        return self.n


def load_matrix(path):
    """Parse a numeric CSV with one header row into (column names, matrix)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise CsvFormatError("empty file")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise CsvFormatError("no data rows after the header")
    values = np.empty((len(body), len(header)), dtype=float)
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise CsvFormatError(
                f"expected {len(header)} cells, found {len(row)}", row=i + 2
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"non-numeric cell {cell.strip()!r}", row=i + 2, column=j + 1
                ) from None
    return tuple(header), values


def load_csv(path, target_column=None) -> Dataset:
    """Parse a numeric CSV with one header row into a Dataset.

    The target column defaults to the last one; the remaining columns form
    x in header order.
    """
    header, values = load_matrix(path)
    if len(header) < 2:
        raise CsvFormatError("need at least one feature column and one target column")
    if target_column is None:
        target_idx = len(header) - 1
    else:
        if target_column not in header:
            raise CsvFormatError(
                f"target column {target_column!r} not in header {list(header)}"
            )
        target_idx = header.index(target_column)
    feature_idx = [j for j in range(len(header)) if j != target_idx]
    names = tuple(header[j] for j in feature_idx) + (header[target_idx],)
    return Dataset(X=values[:, feature_idx], y=values[:, target_idx], column_names=names)


def write_csv(data: Dataset, path) -> None:
    """Write a Dataset as comma-delimited text with full-precision reals."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(data.column_names) + "\n")
        for i in range(data.n):
            cells = [repr(float(v)) for v in data.X[i]] + [repr(float(data.y[i]))]
            fh.write(",".join(cells) + "\n")


@dataclass(eq=False)
class GroundTruth:
    """The planted model behind a generated dataset.

    assignments[i] is the piece index of row i (0 = the default region);
    margin_epsilon bounds every |f(x) - y| strictly, and separation_delta
    lower-bounds all pairwise coefficient distances.
    """

    model: CalfModel
    noise_sigma: float
    separation_delta: float
    margin_epsilon: float
    assignments: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int).copy()
        if a.ndim != 1:
            raise InputError("assignments must be a 1-D index vector")
        if np.any(a < 0) or np.any(a > len(self.model.pieces)):
            raise InputError("assignments must index the model's pieces")
        a.setflags(write=False)
        self.assignments = a
        if self.noise_sigma < 0:
            raise InputError("noise_sigma must be nonnegative")
        if self.separation_delta <= 0 or self.margin_epsilon <= 0:
            raise InputError("separation_delta and margin_epsilon must be positive")

    @property
    def functions(self) -> tuple:
        return (self.model.default,) + tuple(f for f, _ in self.model.pieces)


def _box_area(lo: np.ndarray, hi: np.ndarray) -> ConvexArea:
    """Axis-aligned box [lo, hi] as 2d half-spaces."""
    d = lo.size
    halfspaces = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        halfspaces.append(HalfSpace(alpha=e, gamma=-hi[j]))
        halfspaces.append(HalfSpace(alpha=-e, gamma=lo[j]))
    return ConvexArea(tuple(halfspaces))


def _place_boxes(rng, d: int, m: int):
    """Disjoint axis-aligned boxes of side BOX_SIDE with pairwise gaps >= BOX_SIDE.

    Boxes are anchored in distinct cells of a coarse grid (cell side three
    box sides) and jittered inside their cell, which guarantees the gap.
    """
    capacity = GRID_CELLS_PER_AXIS**d
    if m > capacity:
        raise PlacementError(
            f"cannot place {m} disjoint regions in dimension {d} "
            f"(capacity {capacity})"
        )
    cells = rng.choice(capacity, size=m, replace=False)
    boxes = []
    for cell in cells:
        index = np.empty(d)
        rest = int(cell)
        for j in range(d):
            index[j] = rest % GRID_CELLS_PER_AXIS
            rest //= GRID_CELLS_PER_AXIS
        lo = index * 3.0 * BOX_SIDE + rng.uniform(0.0, BOX_SIDE, size=d)
        boxes.append((lo, lo + BOX_SIDE))
    return boxes


def _draw_functions(rng, d: int, m: int, delta: float):
    """m+1 coefficient vectors with pairwise Euclidean distance >= delta."""
    for _ in range(_COEFF_RETRIES):
        coeffs = rng.uniform(-_COEFF_RANGE, _COEFF_RANGE, size=(m + 1, d + 1))
        models = [LinearModel(coeffs=c) for c in coeffs]
        ok = all(
            coefficient_distance(models[i], models[j]) >= delta
            for i in range(m + 1)
            for j in range(i + 1, m + 1)
        )
        if ok:
            return models
    raise PlacementError(
        f"could not draw {m + 1} functions with pairwise distance >= {delta}"
    )


def generate_separable(n, d, m, sigma, delta, seed):
    """Plant m disjoint convex regions plus a default region and sample them.

    Returns (Dataset, GroundTruth).  Each planted region is an axis-aligned
    box holding at least d+2 points; the default region holds at least d+2
    points kept clear of every box; y = f_piece(x) + N(0, sigma^2) noise
    from a seeded PCG64 generator, so output is a deterministic function of
    the arguments.
    """
    n, d, m = int(n), int(d), int(m)
    if d < 1 or n < 1 or m < 0:
        raise InputError("need n >= 1, d >= 1, m >= 0")
    if sigma < 0:
        raise InputError("sigma must be nonnegative")
    if delta <= 0:
        raise InputError("delta must be positive")
    if n < (m + 1) * (d + 2):
        raise InputError(
            f"need n >= (m+1)(d+2) = {(m + 1) * (d + 2)} so every region "
            f"can host d+2 points (got n={n})"
        )
    rng = np.random.default_rng(seed)
    boxes = _place_boxes(rng, d, m)
    models = _draw_functions(rng, d, m, delta)

    per_piece = max(d + 2, n // (2 * m)) if m > 0 else 0
    counts = [n - m * per_piece] + [per_piece] * m
    span = GRID_CELLS_PER_AXIS * 3.0 * BOX_SIDE
    inset = 0.05 * BOX_SIDE
    pad = 0.25 * BOX_SIDE

    X = np.empty((n, d))
    assignments = np.empty(n, dtype=int)
    row = 0
    for piece in range(1, m + 1):
        lo, hi = boxes[piece - 1]
        pts = rng.uniform(lo + inset, hi - inset, size=(counts[piece], d))
        X[row : row + counts[piece]] = pts
        assignments[row : row + counts[piece]] = piece
        row += counts[piece]
    # Default points: uniform over the arena, rejecting anything near a box.
    needed = counts[0]
    got = 0
    attempts = 0
    cap = _REJECTION_FACTOR * max(needed, 1)
    while got < needed:
        if attempts >= cap:
            raise PlacementError("could not place default-region points clear of the boxes")
        attempts += 1
        x = rng.uniform(-BOX_SIDE, span + BOX_SIDE, size=d)
        near = any(
            np.all(x >= lo - pad) and np.all(x <= hi + pad) for lo, hi in boxes
        )
        if near:
            continue
        X[row + got] = x
        assignments[row + got] = 0
        got += 1

    order = rng.permutation(n)
    X = X[order]
    assignments = assignments[order]

    noise = rng.normal(0.0, sigma, size=n) if sigma > 0 else np.zeros(n)
    y = np.empty(n)
    for i in range(n):
        y[i] = models[assignments[i]].predict(X[i]) + noise[i]

    pieces = tuple((models[k + 1], _box_area(*boxes[k])) for k in range(m))
    model = CalfModel(default=models[0], pieces=pieces)
    peak_noise = float(np.max(np.abs(noise))) if n else 0.0
    truth = GroundTruth(
        model=model,
        noise_sigma=float(sigma),
        separation_delta=float(delta),
        margin_epsilon=max(1e-9, 1.000001 * peak_noise),
        assignments=assignments,
    )
    return Dataset(X=X, y=y), truth
