"""The affine defect operator and solution checks.

For f: R^d -> R^m the defect is

    D f(x, y, z) = f(3x+y+z) + f(x+3y+z) + f(x+y+3z)
                   + f(x) + f(y) + f(z) - 6 f(x+y+z)

and D f vanishes identically exactly when f is affine (a constant plus an
additive map).  This module evaluates D, checks candidate solutions on
triple samples, and decomposes claimed solutions into constant + additive
parts.  All operations are pure; evaluators must be side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetViolationError, InputDomainError
from .fuzzy_norm import as_point, crisp_norm

DEFAULT_TOL = 1e-9   # residual tolerance: double precision, <= 7 calls, |f| <= 1e6


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationBudget:
    """Certified pointwise bound on ||f(x) - (a x + b)||.

    Either a sup bound, a growth profile amplitude * ||x||^exponent, or both
    (the allowance is the smaller where both apply).
    """

    sup_bound: float | None = None
    growth_amplitude: float | None = None
    growth_exponent: float | None = None

    def allowance(self, radii) -> np.ndarray:
        r = np.asarray(radii, dtype=float)
        out = np.full(r.shape, np.inf)
        if self.sup_bound is not None:
            out = np.minimum(out, self.sup_bound)
        if self.growth_amplitude is not None:
            p = self.growth_exponent if self.growth_exponent is not None else 1.0
            powers = np.where(r > 0, r ** p, 0.0)
            out = np.minimum(out, self.growth_amplitude * powers)
        return out

    def to_dict(self) -> dict:
        return {
            "sup_bound": self.sup_bound,
            "growth_amplitude": self.growth_amplitude,
            "growth_exponent": self.growth_exponent,
        }


@dataclass
class TestFunction:
    """An evaluatable map R^d -> R^m with optional affine metadata.

    ``evaluator`` works on batches: (n, d) in, (n, m) out.  Calling the
    TestFunction with a 1-d point (or a scalar when d == 1) returns a 1-d
    value; an (n, d) batch returns (n, m).  With ``verify_budget`` set and
    metadata present, every call opportunistically checks the declared
    perturbation budget and raises BudgetViolationError on breach.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int
    affine_part: tuple[np.ndarray, np.ndarray] | None = None
    budget: PerturbationBudget | None = None
    name: str = ""
    verify_budget: bool = False

    __test__ = False   # keep pytest from collecting this as a test class

    def __call__(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        single = arr.ndim <= 1
        batch = np.atleast_2d(arr)
        if batch.shape[1] != self.dim_in:
            raise InputDomainError(
                f"{self.name or 'function'} expects dimension {self.dim_in}, "
                f"got {batch.shape[1]}")
        if not np.all(np.isfinite(batch)):
            raise InputDomainError("evaluation point has non-finite coordinates")
        values = np.asarray(self.evaluator(batch), dtype=float)
        values = values.reshape(batch.shape[0], self.dim_out)
        if self.verify_budget and self.affine_part is not None and self.budget is not None:
            a, b = self.affine_part
            residual = crisp_norm(values - (batch @ a.T + b))
            allowed = self.budget.allowance(crisp_norm(batch)) + 1e-9
            if np.any(residual > allowed):
                i = int(np.argmax(residual - allowed))
                raise BudgetViolationError(
                    f"budget exceeded at x={batch[i].tolist()}: "
                    f"residual {residual[i]:.6g} > allowance {allowed[i]:.6g}")
        return values[0] if single else values


# ---------------------------------------------------------------------------
# triple samples
# ---------------------------------------------------------------------------

@dataclass
class TripleSample:
    """A deterministic batch of (x, y, z) argument triples."""

    triples: np.ndarray   # (K, 3, d)
    seed: int

    def __post_init__(self):
        self.triples = np.asarray(self.triples, dtype=float)
        if self.triples.ndim != 3 or self.triples.shape[1] != 3:
            raise InputDomainError("triples must have shape (K, 3, d)")
        if not np.all(np.isfinite(self.triples)):
            raise InputDomainError("triples contain non-finite coordinates")

    @property
    def x(self) -> np.ndarray:
        return self.triples[:, 0, :]

    @property
    def y(self) -> np.ndarray:
        return self.triples[:, 1, :]

    @property
    def z(self) -> np.ndarray:
        return self.triples[:, 2, :]

    def __len__(self) -> int:
        return self.triples.shape[0]


def standard_triples(dim: int, count: int = 200, radius: float = 2.0,
                     seed: int = 0, include: Sequence = ()) -> TripleSample:
    """Degenerate triples first (so they become first-failure witnesses),
    then caller extras, then seeded uniform triples in a cube of the given
    radius."""
    e1 = np.zeros(dim)
    e1[0] = 1.0
    zero = np.zeros(dim)
    rows = [
        (zero, zero, zero),
        (e1, zero, zero),          # the y = z = 0 substitution
        (e1, -e1, -e1),            # the y = z = -x substitution
        (e1, e1, -e1),             # the z = -y substitution
        (0.5 * e1, zero, zero),
    ]
    for item in include:
        rows.append(tuple(as_point(p, dim) for p in item))
    rng = np.random.default_rng(seed)
    n_random = max(0, count - len(rows))
    rand = rng.uniform(-radius, radius, size=(n_random, 3, dim))
    triples = np.concatenate([np.array(rows, dtype=float), rand]) if n_random \
        else np.array(rows, dtype=float)
    return TripleSample(triples, seed)


# ---------------------------------------------------------------------------
# the defect operator
# ---------------------------------------------------------------------------

def eval_D(f: TestFunction, x, y, z) -> np.ndarray:
    """Defect at a single triple, using exactly 7 evaluations of f."""
    px, py, pz = as_point(x), as_point(y), as_point(z)
    if not (px.shape == py.shape == pz.shape):
        raise InputDomainError("x, y, z must share one dimension")
    s = px + py + pz
    return (f(s + 2 * px) + f(s + 2 * py) + f(s + 2 * pz)
            + f(px) + f(py) + f(pz) - 6 * f(s))


def eval_D_many(f: TestFunction, X, Y, Z) -> np.ndarray:
    """Defect over (K, d) batches; one stacked evaluator call of 7K rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if not (X.shape == Y.shape == Z.shape):
        raise InputDomainError("X, Y, Z batches must share one shape")
    S = X + Y + Z
    stacked = np.concatenate([S + 2 * X, S + 2 * Y, S + 2 * Z, X, Y, Z, S])
    vals = f(stacked)
    k = X.shape[0]
    blocks = [vals[i * k:(i + 1) * k] for i in range(7)]
    return blocks[0] + blocks[1] + blocks[2] + blocks[3] + blocks[4] + blocks[5] \
        - 6 * blocks[6]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    max_residual: float
    witness: list | None = None

    def to_dict(self) -> dict:
        return {
            "check_name": self.name,
            "pass": self.passed,
            "max_residual": self.max_residual,
            "witness": self.witness,
        }


@dataclass
class SolutionCheck:
    passed: bool
    max_residual: float
    witness: list | None
    witness_residual: float | None
    tol: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "check_name": "solution",
            "pass": self.passed,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "witness_residual": self.witness_residual,
            "tol": self.tol,
            "n_samples": self.n_samples,
        }


def check_solution(f: TestFunction, samples: TripleSample,
                   tol: float = DEFAULT_TOL) -> SolutionCheck:
    """True iff ||D f|| <= tol at every sampled triple.

    The witness is the first failing triple in sample order (degenerate
    triples lead, so small canonical witnesses surface first).
    """
    defects = eval_D_many(f, samples.x, samples.y, samples.z)
    residuals = crisp_norm(defects)
    max_res = float(residuals.max()) if len(residuals) else 0.0
    failing = np.nonzero(residuals > tol)[0]
    witness = None
    witness_res = None
    if failing.size:
        i = int(failing[0])
        witness = samples.triples[i].tolist()
        witness_res = float(residuals[i])
    return SolutionCheck(failing.size == 0, max_res, witness, witness_res,
                         tol, len(samples))


@dataclass
class SubstitutionReport:
    checks: list
    raw_reflection_residual: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "raw_reflection_residual": self.raw_reflection_residual,
            "pass": self.passed,
        }


def substitution_suite(f: TestFunction, probes, tol: float = DEFAULT_TOL
                       ) -> SubstitutionReport:
    """Three named identities every exact solution satisfies, via g = f - f(0):

      triple_scaling   g(3x) = 3 g(x)
      oddness          g(-x) = -g(x)
      symmetric_mean   g(x + 2y) + g(x - 2y) = 2 g(x)

    Run check_solution first; these derived identities assume an exact
    solution.  The raw reflection combination 2g(x) + 2g(-3x) - 4g(-x)
    (whose only role is to force oddness) is recorded as well.
    """
    P = np.atleast_2d(np.asarray(probes, dtype=float))
    g0 = f(np.zeros(f.dim_in))

    def g(batch):
        return f(batch) - g0

    checks = []

    res = crisp_norm(g(3 * P) - 3 * g(P))
    checks.append(_to_check("triple_scaling", res, P, tol))

    res = crisp_norm(g(-P) + g(P))
    checks.append(_to_check("oddness", res, P, tol))

    idx_x, idx_y = np.meshgrid(np.arange(len(P)), np.arange(len(P)), indexing="ij")
    X = P[idx_x.ravel()]
    Y = P[idx_y.ravel()]
    res = crisp_norm(g(X + 2 * Y) + g(X - 2 * Y) - 2 * g(X))
    pairs = np.stack([X, Y], axis=1)
    checks.append(_to_check("symmetric_mean", res, pairs, tol))

    raw = float(crisp_norm(2 * g(P) + 2 * g(-3 * P) - 4 * g(-P)).max())
    return SubstitutionReport(checks, raw)


def _to_check(name: str, residuals: np.ndarray, witnesses: np.ndarray,
              tol: float) -> CheckResult:
    max_res = float(residuals.max()) if len(residuals) else 0.0
    witness = None
    if max_res > tol:
        witness = witnesses[int(np.argmax(residuals))].tolist()
    return CheckResult(name, max_res <= tol, max_res, witness)


@dataclass
class AffineDecomposition:
    additive: bool
    homogeneous: bool
    constant: np.ndarray
    additivity_residual: float
    scaling_residual: float
    additivity_witness: list | None = None
    scaling_witness: list | None = None

    @property
    def passed(self) -> bool:
        return self.additive and self.homogeneous

    def to_dict(self) -> dict:
        return {
            "additive": self.additive,
            "homogeneous": self.homogeneous,
            "constant": self.constant,
            "additivity_residual": self.additivity_residual,
            "scaling_residual": self.scaling_residual,
            "additivity_witness": self.additivity_witness,
            "scaling_witness": self.scaling_witness,
        }


def affine_decompose(A: TestFunction, probes, tol: float = DEFAULT_TOL
                     ) -> AffineDecomposition:
    """Split a candidate solution into constant + additive part and verify both.

    With c = A(0) and g = A - c, additivity is checked through the midpoint
    substitution u -> (u+v)/2 (so g(u) + g(v) = 2 g((u+v)/2) is exercised
    alongside g(u+v) = g(u) + g(v)), and homogeneity as g(3x) = 3 g(x).
    """
    P = np.atleast_2d(np.asarray(probes, dtype=float))
    if len(P) == 0:
        raise InputDomainError("probes must be nonempty")
    c = A(np.zeros(A.dim_in))

    def g(batch):
        return A(batch) - c

    idx_u, idx_v = np.meshgrid(np.arange(len(P)), np.arange(len(P)), indexing="ij")
    U = P[idx_u.ravel()]
    V = P[idx_v.ravel()]
    gU, gV = g(U), g(V)
    direct = crisp_norm(g(U + V) - gU - gV)
    midpoint = crisp_norm(2 * g((U + V) / 2) - gU - gV)
    add_res = np.maximum(direct, midpoint)
    add_max = float(add_res.max())
    add_wit = np.stack([U, V], axis=1)[int(np.argmax(add_res))].tolist() \
        if add_max > tol else None

    scale_res = crisp_norm(g(3 * P) - 3 * g(P))
    scale_max = float(scale_res.max())
    scale_wit = P[int(np.argmax(scale_res))].tolist() if scale_max > tol else None

    return AffineDecomposition(add_max <= tol, scale_max <= tol, c,
                               add_max, scale_max, add_wit, scale_wit)
