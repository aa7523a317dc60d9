"""Export the piecewise fit as a mixed-integer program document.

The program picks M local models (coefficients beta_j), M*K half-spaces
(alpha_jk, gamma_jk), and binary indicators ind[i,j,k] deciding which
half-spaces hold at each point; prod[i,j] = prod_k ind[i,j,k] marks point
i as belonging to piece j.  The objective is the total squared error of
the default model plus the indicator-activated local corrections.  We
build and serialize the program; solving it is left to external tools.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .exceptions import InputError, SchemaError

MIP_SCHEMA_VERSION = 1
_TAU_SCALE = 1e-6


def default_tau(X: np.ndarray) -> float:
    """Default activation slack: a small negative value at the data's scale."""
    peak = float(np.max(np.abs(X))) if X.size else 0.0
    return -_TAU_SCALE * (1.0 + peak)


@dataclass(eq=False)
class MipInstance:
    """One program: data matrix plus sizes (M pieces, K half-spaces each)."""

    n: int
    d: int
    M: int
    K: int
    tau: float
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.M < 1 or self.K < 1:
            raise InputError("need M >= 1 and K >= 1")
        if not self.tau < 0:
            raise InputError("tau must be strictly negative")
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.shape != (self.n, self.d) or y.shape != (self.n,):
            raise InputError("data matrix does not match the declared sizes")
        X.setflags(write=False)
        y.setflags(write=False)
        self.X = X
        self.y = y

    def __eq__(self, other):
        if not isinstance(other, MipInstance):
            return NotImplemented
        return (
            (self.n, self.d, self.M, self.K) == (other.n, other.d, other.M, other.K)
            and self.tau == other.tau
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    @property
    def local_continuous_count(self) -> int:
        """Continuous variables of the M local models: (d+1)(K+1)M."""
        return (self.d + 1) * (self.K + 1) * self.M

    @property
    def constraint_count(self) -> int:
        """Total constraints: n(M(2K+1)+1)."""
        return self.n * (self.M * (2 * self.K + 1) + 1)

    def variable_blocks(self) -> list:
        return [
            {"name": "beta", "shape": [self.M + 1, self.d + 1], "kind": "continuous"},
            {"name": "alpha", "shape": [self.M, self.K, self.d], "kind": "continuous"},
            {"name": "gamma", "shape": [self.M, self.K], "kind": "continuous"},
            {"name": "ind", "shape": [self.n, self.M, self.K], "kind": "binary"},
            {"name": "prod", "shape": [self.n, self.M], "kind": "derived"},
        ]

    def constraints(self) -> list:
        """All constraint rows, one dict per row, grouped by family."""
        rows = []
        for i in range(self.n):
            for j in range(self.M):
                for k in range(self.K):
                    rows.append({"family": "indicator_binary", "i": i, "j": j, "k": k})
        for i in range(self.n):
            rows.append({"family": "one_piece_per_point", "i": i})
        for i in range(self.n):
            for j in range(self.M):
                rows.append({"family": "product_link", "i": i, "j": j})
        for i in range(self.n):
            for j in range(self.M):
                for k in range(self.K):
                    rows.append(
                        {"family": "halfspace_activation", "i": i, "j": j, "k": k}
                    )
        return rows

    def objective_terms(self) -> list:
        """Per point: the residual's terms; objective = sum of squared residuals."""
        out = []
        for i in range(self.n):
            terms = [{"coeff": 1.0, "vars": [["beta", 0, 0]]}]
            for l in range(self.d):
                terms.append({"coeff": float(self.X[i, l]), "vars": [["beta", 0, l + 1]]})
            for j in range(self.M):
                terms.append({"coeff": 1.0, "vars": [["prod", i, j], ["beta", j + 1, 0]]})
                for l in range(self.d):
                    terms.append(
                        {
                            "coeff": float(self.X[i, l]),
                            "vars": [["prod", i, j], ["beta", j + 1, l + 1]],
                        }
                    )
            out.append({"point": i, "constant": -float(self.y[i]), "terms": terms})
        return out

    # -- evaluation against a candidate assignment --

    def _halfspace_value(self, assignment, i, j, k) -> float:
        alpha = assignment["alpha"][j, k]
        gamma = assignment["gamma"][j, k]
        return float(alpha @ self.X[i] + gamma)

    def residuals(self, assignment) -> np.ndarray:
        beta = np.asarray(assignment["beta"], dtype=float)
        prod = np.asarray(assignment["prod"], dtype=float)
        A = np.concatenate([np.ones((self.n, 1)), self.X], axis=1)
        pred = A @ beta[0]
        for j in range(self.M):
            pred = pred + prod[:, j] * (A @ beta[j + 1])
        return pred - self.y

    def evaluate_objective(self, assignment) -> float:
        """Total squared error of an assignment of all variable blocks."""
        r = self.residuals(assignment)
        return float(r @ r)

    def constraint_violations(self, assignment) -> np.ndarray:
        """Violation magnitude per constraint row (0 when satisfied)."""
        ind = np.asarray(assignment["ind"], dtype=float)
        prod = np.asarray(assignment["prod"], dtype=float)
        out = []
        for row in self.constraints():
            family = row["family"]
            if family == "indicator_binary":
                v = ind[row["i"], row["j"], row["k"]]
                out.append(abs(v * (1.0 - v)))
            elif family == "one_piece_per_point":
                out.append(max(0.0, float(prod[row["i"]].sum()) - 1.0))
            elif family == "product_link":
                expected = float(np.prod(ind[row["i"], row["j"]]))
                out.append(abs(float(prod[row["i"], row["j"]]) - expected))
            else:
                v = ind[row["i"], row["j"], row["k"]]
                value = self._halfspace_value(assignment, row["i"], row["j"], row["k"])
                out.append(max(0.0, (v - 0.5) * value - self.tau))
        return np.array(out)


def build_mip(data: Dataset, M: int, K: int, tau: float | None = None) -> MipInstance:
    """Materialize the program for a dataset and piece/half-space budget."""
    if tau is None:
        tau = default_tau(data.X)
    return MipInstance(n=data.n, d=data.d, M=int(M), K=int(K), tau=float(tau), X=data.X, y=data.y)


def instance_to_doc(instance: MipInstance) -> dict:
    return {
        "version": MIP_SCHEMA_VERSION,
        "note": (
            "indicators are binary: the quadratic row ind*(1-ind)=0 pins each "
            "ind to {0,1}; prod rows are their per-piece products"
        ),
        "n": instance.n,
        "d": instance.d,
        "M": instance.M,
        "K": instance.K,
        "tau": float(instance.tau),
        "counts": {
            "local_continuous_variables": instance.local_continuous_count,
            "constraints": instance.constraint_count,
        },
        "variables": instance.variable_blocks(),
        "objective": {
            "sense": "minimize",
            "form": "sum of squared point residuals",
            "residuals": instance.objective_terms(),
        },
        "constraints": instance.constraints(),
        "data": {
            "X": [[float(v) for v in row] for row in instance.X],
            "y": [float(v) for v in instance.y],
        },
    }


def export_mip(instance: MipInstance, path) -> None:
    """Write the program as canonical JSON (sorted keys, full precision)."""
    with open(path, "w") as fh:
        json.dump(instance_to_doc(instance), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_mip(path) -> MipInstance:
    """Read an exported program back into an instance, checking its header."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if doc.get("version") != MIP_SCHEMA_VERSION:
        raise SchemaError(f"unsupported document version {doc.get('version')}")
    try:
        instance = MipInstance(
            n=int(doc["n"]),
            d=int(doc["d"]),
            M=int(doc["M"]),
            K=int(doc["K"]),
            tau=float(doc["tau"]),
            X=np.array(doc["data"]["X"], dtype=float).reshape(int(doc["n"]), int(doc["d"])),
            y=np.array(doc["data"]["y"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed program document: {exc}") from exc
    counts = doc.get("counts", {})
    if counts.get("constraints") != instance.constraint_count or counts.get(
        "local_continuous_variables"
    ) != instance.local_continuous_count:
        raise SchemaError("document header counts disagree with its declared sizes")
    return instance
