"""Fitting piecewise-linear models over disjoint convex areas.

Three solution paths live here:

* naive_calr: exact single-piece solver by subset enumeration (small n);
* cas_calr: the sampling solver — draw d+1 points, gate on the F-test,
  separability and coefficient distance, shrink the residual set, then
  build piece areas and hand overlap strips to post;
* cas2: a two-function variant that settles piece-vs-default by which of
  the two fitting sets is separable.

All randomness goes through numpy's default PCG64 generator seeded from
the config, so fits are deterministic per (data, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .calf import CalfModel
from .dataset import Dataset
from .exceptions import (
    BudgetExhaustedError,
    InputError,
    SeparabilityError,
)
from .geometry import cac, cacs
from .linreg import LinearModel, _ols, coefficient_distance, lr

_EPS_MULTIPLIER = 4.0
_EPS_FLOOR_SCALE = 1e-9
_CONSENSUS_ROUNDS = 4
_SUPPORT_SHARE = 4
NAIVE_CAP_DEFAULT = 16


@dataclass
class FitConfig:
    """Knobs for the sampling solvers.

    epsilon may be the string "auto" (estimate the residual scale from the
    first accepted model) or a positive float; max_samples of None means
    200 * (2m)^(d+1) draws, sized so a pure within-piece sample is drawn
    many times over in expectation.
    """

    m: int = 1
    tau: float = 0.05
    epsilon: object = "auto"
    delta: float = 0.5
    seed: int = 0
    max_samples: int | None = None
    separator: str = "lp"

    def __post_init__(self):
        if self.m < 0:
            raise InputError("m must be nonnegative")
        if not (0.0 < self.tau < 1.0):
            raise InputError("tau must lie in (0, 1)")
        if self.epsilon != "auto":
            self.epsilon = float(self.epsilon)
            if self.epsilon <= 0:
                raise InputError('epsilon must be positive or "auto"')
        if self.delta <= 0:
            raise InputError("delta must be positive")
        if self.max_samples is not None and self.max_samples < 1:
            raise InputError("max_samples must be positive")
        if self.separator not in ("lp", "svm"):
            raise InputError('separator must be "lp" or "svm"')


def default_budget(m: int, d: int) -> int:
    """Default sampling budget: 200 * (2m)^(d+1) draws."""
    return 200 * (2 * max(m, 1)) ** (d + 1)


def _separator(config: FitConfig):
    return cac if config.separator == "lp" else cacs


def _epsilon_floor(y: np.ndarray) -> float:
    peak = float(np.max(np.abs(y))) if len(y) else 0.0
    return _EPS_FLOOR_SCALE * (1.0 + peak)


def _local_scale(X, y, rng, anchors: int = 25) -> float:
    """Noise-scale estimate from small nearest-neighbor fits.

    Fits a hyperplane to the 2(d+2) nearest neighbors of a few random
    anchor points and takes the median residual scale: neighborhoods deep
    inside one region measure the noise, while the minority straddling a
    region boundary inflate and drop out of the median.
    """
    n, d = X.shape
    k = min(n, 2 * (d + 2))
    if k < d + 2:
        return 0.0
    idx = rng.choice(n, size=min(n, anchors), replace=False)
    scales = []
    for i in idx:
        dist2 = np.sum((X - X[i]) ** 2, axis=1)
        nb = np.argpartition(dist2, k - 1)[:k] if k < n else np.arange(n)
        f = _ols(X[nb], y[nb])
        r = y[nb] - f.predict_batch(X[nb])
        scales.append(math.sqrt(float(r @ r) / (k - d - 1)))
    return float(np.median(scales))


def _auto_epsilon(X, y, rng) -> float:
    """Fitting tolerance from the estimated noise scale, floored above zero."""
    return max(_EPS_MULTIPLIER * _local_scale(X, y, rng), _epsilon_floor(y))


def _refit_within(X, y, f, eps, rounds=_CONSENSUS_ROUNDS):
    """Refit on all points with residual < eps, a fixed number of rounds."""
    d = X.shape[1]
    for _ in range(rounds):
        r = np.abs(y - f.predict_batch(X))
        sel = r < eps
        if int(sel.sum()) < d + 2:
            break
        f = _ols(X[sel], y[sel])
    return f


def _candidate_fit(X, y, sample_idx, eps):
    """Refine one sampled interpolant into (model, support) at tolerance eps.

    A few rounds of refitting on the points within eps snap a sample drawn
    inside one piece onto that piece; support counts the final fitting
    points and stays near d+1 for a plane cutting across pieces, because a
    slab of width 2 eps around a wrong plane holds almost nothing.
    """
    f = _ols(X[sample_idx], y[sample_idx])
    f = _refit_within(X, y, f, eps)
    support = int((np.abs(y - f.predict_batch(X)) < eps).sum())
    return f, support


def _rank_deficient(X, sample_idx) -> bool:
    A = np.concatenate([np.ones((len(sample_idx), 1)), X[sample_idx]], axis=1)
    return np.linalg.matrix_rank(A) < X.shape[1] + 1


def _simplex_contains_any(S, Q, tol=1e-9) -> bool:
    """Whether the closed hull of d+1 affinely independent points S holds any row of Q.

    Exact barycentric test: lam solves [S^T; 1] lam = [q; 1]; q is inside
    iff every coordinate is nonnegative.  Used as a fast certified path for
    the hull-emptiness question on simplices.
    """
    if len(Q) == 0:
        return False
    A = np.concatenate([S.T, np.ones((1, len(S)))])
    B = np.concatenate([Q.T, np.ones((1, len(Q)))])
    try:
        lam = np.linalg.solve(A, B)
    except np.linalg.LinAlgError:
        return False  # degenerate simplex; let the caller's separator decide
    return bool(np.any(np.min(lam, axis=0) >= -tol))


def _sample_separable_from_rest(Xr, sample_local, separate) -> bool:
    """Gate: the sampled simplex must be separable from the rest of the residual set.

    The wide prefilter tolerance also skips samples with another point
    barely outside their hull; separating those costs the separator dearly
    and a fresh draw is cheaper.
    """
    inside = np.zeros(len(Xr), dtype=bool)
    inside[sample_local] = True
    if _simplex_contains_any(Xr[sample_local], Xr[~inside], tol=1e-6):
        return False
    return separate(Xr, inside) is not None


def distinct(F, data: Dataset, epsilon: float) -> Dataset:
    """Points fitted by exactly one model of F (residual < epsilon once).

    Each model marks its fitting points; a first fit marks a point 1, a
    second fit marks it -1 for good, and only points still marked 1
    survive — so duplicates in F erase their shared points.
    """
    if len(F) == 0:
        raise InputError("need at least one model")
    marks = np.zeros(data.n, dtype=int)
    for f in F:
        fit = np.abs(data.y - f.predict_batch(data.X)) < epsilon
        newly = fit & (marks == 0)
        again = fit & (marks == 1)
        marks[again] = -1
        marks[newly] = 1
    return data.subset(np.flatnonzero(marks == 1))


def post(H_partial, leftovers: Dataset, epsilon: float, exclude=None, separate=cac):
    """Assign points fitting two models to a new area for the pair's first model.

    For each pair of models (earlier, later) the points fitting both are
    carved out of the leftovers with one convex area and handed to the
    earlier model; optional exclude points are kept out of every new area.
    Raises SeparabilityError when some pair's point set cannot be
    separated; every leftover point ends up in exactly one returned area.
    """
    if leftovers.n == 0:
        return []
    models = [f for f, _ in H_partial]
    X, y = leftovers.X, leftovers.y
    fits = np.column_stack(
        [np.abs(y - f.predict_batch(X)) < epsilon for f in models]
    )
    exclude = (
        np.zeros((0, leftovers.d)) if exclude is None else np.asarray(exclude, dtype=float)
    )
    unassigned = np.ones(leftovers.n, dtype=bool)
    new_pairs = []
    for i, j in combinations(range(len(models)), 2):
        pair_mask = unassigned & fits[:, i] & fits[:, j]
        if not np.any(pair_mask):
            continue
        others = np.flatnonzero(unassigned & ~pair_mask)
        pts = np.vstack([X[pair_mask], X[others], exclude])
        inside = np.zeros(len(pts), dtype=bool)
        inside[: int(pair_mask.sum())] = True
        area = separate(pts, inside)
        if area is None:
            raise SeparabilityError(
                "points fitting two models could not be carved into their own area"
            )
        new_pairs.append((models[i], area))
        unassigned &= ~pair_mask
    if np.any(unassigned):
        raise SeparabilityError(
            "some leftover points fit fewer than two models; caller contract violated"
        )
    return new_pairs


def _global_model(data: Dataset) -> CalfModel:
    return CalfModel(default=lr(data), pieces=())


def _assemble(data, F, eps, config):
    """Turn accepted models into (default, pieces) with disjoint areas."""
    X, y = data.X, data.y
    n = data.n
    separate = _separator(config)
    fits = np.column_stack([np.abs(y - f.predict_batch(X)) < eps for f in F])
    counts = fits.sum(axis=1)
    unique = counts == 1
    if int(unique.sum()) < n // 2:
        # On separable data nearly every point fits exactly one model; an
        # eps blown up by a bad acceptance floods the overlap instead.
        raise SeparabilityError(
            f"only {int(unique.sum())} of {n} points fit exactly one model"
        )
    # Refit every model on the points fitting it alone: where two models
    # run within eps of each other, one of them was accepted off a refit
    # that also swallowed a strip of the other's points, and this sheds
    # that contamination now that both are known.
    for fi in range(len(F)):
        own = np.flatnonzero(unique & fits[:, fi])
        if len(own) >= data.d + 2:
            F[fi] = _ols(X[own], y[own])
    fits = np.column_stack([np.abs(y - f.predict_batch(X)) < eps for f in F])
    counts = fits.sum(axis=1)
    unique = counts == 1
    uni_idx = np.flatnonzero(unique)
    areas = []
    inseparable = []
    for fi in range(len(F)):
        own = unique & fits[:, fi]
        if not np.any(own):
            areas.append(None)
            inseparable.append(fi)
            continue
        area = separate(X[uni_idx], own[uni_idx])
        areas.append(area)
        if area is None:
            inseparable.append(fi)
    if len(inseparable) > 1:
        raise SeparabilityError(
            f"{len(inseparable)} fitted models have non-separable point sets; "
            "expected at most one (the default)"
        )
    if inseparable:
        default_idx = inseparable[0]
    else:
        # Every point set is separable; make the best-supported model the
        # default so the piece areas stay as small as possible.
        default_idx = int(np.argmax((fits & unique[:, None]).sum(axis=0)))
    piece_order = [fi for fi in range(len(F)) if fi != default_idx]
    pieces = [(F[fi], areas[fi]) for fi in piece_order]

    # Points fitting two or more models: those fitting the default stay in
    # the default region; those inside an existing piece area are already
    # predicted consistently; the rest get strip areas of their own.
    leftovers = (counts >= 2) & ~fits[:, default_idx]
    strip_idx = np.flatnonzero(leftovers)
    if len(strip_idx) and pieces:
        covered = np.zeros(len(strip_idx), dtype=bool)
        for _, area in pieces:
            covered |= area.contains_batch(X[strip_idx])
        strip_idx = strip_idx[~covered]
    if len(strip_idx):
        keep_out = np.ones(n, dtype=bool)
        keep_out[strip_idx] = False
        pieces = pieces + post(
            pieces,
            data.subset(strip_idx),
            eps,
            exclude=X[keep_out],
            separate=separate,
        )
    return F[default_idx], pieces


def cas_calr(data: Dataset, config: FitConfig) -> CalfModel:
    """Sampling solver: find m piece models plus a default, then carve areas.

    Draws d+1-point subsets of the residual set and accepts a candidate
    that passes the F-test gate (p < tau), is separable as a point set from
    the rest of the residual set, keeps enough fitting points to look like
    a real piece, and sits at coefficient distance >= delta from every
    earlier acceptance; each acceptance shrinks the residual set.  With
    epsilon="auto" the fitting tolerance comes from a nearest-neighbor
    noise estimate made before sampling.  If the residual set runs dry
    early or the accepted models cannot be assembled into disjoint areas,
    the search restarts from scratch on the same draw budget.  Raises
    BudgetExhaustedError (carrying the largest partial model list and a
    global-fit fallback) when the budget runs out.
    """
    if config.m == 0:
        model = _global_model(data)
        model.fit_info = {"samples_used": 0, "epsilon": None, "algorithm": "cas"}
        return model
    n, d = data.n, data.d
    if n <= (config.m + 1) * (d + 1):
        raise InputError(
            f"need n > (m+1)(d+1) = {(config.m + 1) * (d + 1)} points (got {n})"
        )
    X, y = data.X, data.y
    rng = np.random.default_rng(config.seed)
    budget = config.max_samples or default_budget(config.m, d)
    separate = _separator(config)
    eps = _auto_epsilon(X, y, rng) if config.epsilon == "auto" else float(config.epsilon)
    target = config.m + 1
    remaining = np.arange(n)
    accepted = []
    best_partial = []
    attempts = 1
    assembled = None
    draws = 0
    while assembled is None:
        while len(accepted) < target and draws < budget and len(remaining) >= d + 1:
            draws += 1
            Xr, yr = X[remaining], y[remaining]
            sample_local = rng.choice(len(remaining), size=d + 1, replace=False)
            if _rank_deficient(Xr, sample_local):
                continue
            f_raw = _ols(Xr[sample_local], yr[sample_local])
            if not f_raw.p_value < config.tau:
                continue
            if not _sample_separable_from_rest(Xr, sample_local, separate):
                continue
            f, support = _candidate_fit(Xr, yr, sample_local, eps)
            if support < max(d + 2, len(remaining) // (_SUPPORT_SHARE * (config.m + 1))):
                continue
            if any(coefficient_distance(f, g) < config.delta for g in accepted):
                continue
            accepted.append(f)
            r = np.abs(yr - f.predict_batch(Xr))
            remaining = remaining[r >= eps]
        if len(accepted) > len(best_partial):
            best_partial = list(accepted)
        if len(accepted) == target:
            try:
                assembled = _assemble(data, accepted, eps, config)
            except SeparabilityError:
                assembled = None
        if assembled is None:
            if draws >= budget:
                raise BudgetExhaustedError(
                    f"no assembly of {target} models within {draws} draws "
                    f"({attempts} attempts)",
                    partial_models=best_partial,
                    samples_used=draws,
                    fallback=_global_model(data),
                )
            attempts += 1
            remaining = np.arange(n)
            accepted = []
    default, pieces = assembled
    model = CalfModel(default=default, pieces=tuple(pieces))
    model.fit_info = {
        "samples_used": draws,
        "epsilon": eps,
        "algorithm": "cas",
        "attempts": attempts,
        "accepted_p_values": [f.p_value for f in accepted],
    }
    return model


def cas2(data: Dataset, config: FitConfig) -> CalfModel:
    """Two-function solver: one sampled fit splits the data, areas decide roles.

    Samples until a fit passes the F-test gate, splits points into the
    fitting set and its complement (dropping points fitting both), and
    keeps whichever side admits a convex area: that side becomes the
    single piece and the other model the default.  Mixed samples are
    redrawn under the same budget as cas_calr.
    """
    if config.m != 1:
        raise InputError("this solver handles exactly one piece (m=1)")
    n, d = data.n, data.d
    if n <= 2 * (d + 1):
        raise InputError(f"need n > 2(d+1) = {2 * (d + 1)} points (got {n})")
    X, y = data.X, data.y
    rng = np.random.default_rng(config.seed)
    budget = config.max_samples or default_budget(1, d)
    separate = _separator(config)
    eps = _auto_epsilon(X, y, rng) if config.epsilon == "auto" else float(config.epsilon)
    draws = 0
    neither_separable = 0
    while draws < budget:
        draws += 1
        sample_idx = rng.choice(n, size=d + 1, replace=False)
        if _rank_deficient(X, sample_idx):
            continue
        f_raw = _ols(X[sample_idx], y[sample_idx])
        if not f_raw.p_value < config.tau:
            continue
        f1, support = _candidate_fit(X, y, sample_idx, eps)
        fits1 = np.abs(y - f1.predict_batch(X)) < eps
        if support < max(d + 2, n // (_SUPPORT_SHARE * 2)):
            continue
        if int(fits1.sum()) < d + 2 or int((~fits1).sum()) < d + 2:
            continue
        f2 = _ols(X[~fits1], y[~fits1])
        fits2 = np.abs(y - f2.predict_batch(X)) < eps
        both = fits1 & fits2
        d1 = fits1 & ~both
        d2 = ~fits1
        universe = np.flatnonzero(~both)
        if not d1.any() or not d2.any():
            continue
        area1 = separate(X[universe], d1[universe])
        if area1 is not None:
            piece, default, branch = (f1, area1), f2, "piece_area"
        else:
            area2 = separate(X[universe], d2[universe])
            if area2 is None:
                neither_separable += 1
                continue
            piece, default, branch = (f2, area2), f1, "complement_area"
        model = CalfModel(default=default, pieces=(piece,))
        model.fit_info = {
            "samples_used": draws,
            "epsilon": eps,
            "algorithm": "cas2",
            "branch": branch,
        }
        return model
    if neither_separable:
        raise SeparabilityError(
            f"neither point set was separable in {neither_separable} of "
            f"{draws} attempts; the data does not look one-piece separable"
        )
    raise BudgetExhaustedError(
        f"no acceptable split found in {draws} draws",
        partial_models=[],
        samples_used=draws,
        fallback=_global_model(data),
    )


def naive_calr(data: Dataset, cap: int = NAIVE_CAP_DEFAULT) -> CalfModel:
    """Exact one-piece solver by exhaustive subset enumeration.

    Tries every subset D of size d+1 .. n-d-1 as the piece's point set,
    keeps those whose convex area excludes everything else, and returns
    the area-plus-complement model with the smallest total squared error;
    falls back to the single global fit when it ties or nothing separates.
    The exponential loop refuses to run past the cap unless raised.
    """
    n, d = data.n, data.d
    if n > cap:
        raise InputError(
            f"subset enumeration over n={n} points is exponential; "
            f"raise the cap ({cap}) explicitly to force it"
        )
    X, y = data.X, data.y
    global_fit = lr(data)
    global_sse = global_fit.mse * n
    candidates = []
    for size in range(d + 1, n - d):
        for subset in combinations(range(n), size):
            idx = np.array(subset)
            mask = np.zeros(n, dtype=bool)
            mask[idx] = True
            f_in = _ols(X[idx], y[idx])
            f_out = _ols(X[~mask], y[~mask])
            sse = f_in.mse * len(idx) + f_out.mse * (n - len(idx))
            candidates.append((sse, mask, f_in, f_out))
    candidates.sort(key=lambda c: c[0])
    # Ties are judged at rounding-noise resolution so an exactly-linear
    # dataset does not hand the win to an arbitrary subset split.
    tie_tol = 1e-12 * float(np.sum((y - y.mean()) ** 2))
    for sse, mask, f_in, f_out in candidates:
        if sse >= global_sse - tie_tol:
            break  # remaining candidates cannot beat the zero-piece model
        area = cac(X, mask)
        if area is None:
            continue
        if int(area.contains_batch(X).sum()) != int(mask.sum()):
            continue
        return CalfModel(default=f_out, pieces=((f_in, area),))
    return _global_model(data)
