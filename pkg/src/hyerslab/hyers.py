"""Direct-method extraction of affine approximants and its certified bounds.

Given an approximately affine f, the stabilized map is the limit of
g(3^n x) / 3^n with g = f - f(0).  The truncation error of that iteration
is controlled by the geometric stage sum  sum_{j<n} alpha^j / 3^(j+1)
(limit 1/(3 - alpha)) where alpha < 3 is the scaling factor of the control
function that dominates the defect D f.  This module implements the
iteration, the stage bound, the summed control series, and verifiers for
the non-uniform bound, the uniform bound, the uniform limit, uniqueness,
and the power-control corollary.

Determinism: every operation is pure; identical inputs give bit-identical
reports.  Iteration over depth is sequential per probe, but probes are
independent and evaluated as one batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (DivergentSeriesError, InputDomainError,
                     IterationOverflowError, NonConvergedError)
from .functional_eq import TestFunction, TripleSample, eval_D_many, standard_triples
from .fuzzy_norm import (CrispInduced, CustomNorm, NormSpec, _memberships_rows,
                         _radius_membership, as_point, crisp_norm,
                         membership_threshold)

_OVERFLOW_GUARD = 1e290   # stay clear of the double-precision ceiling


def _pow0(r, p: float):
    """r**p with the continuous-at-zero convention 0**p := 0 (also for p=0),
    so power controls vanish exactly at the zero vector."""
    r = np.asarray(r, dtype=float)
    return np.where(r > 0.0, r ** p, 0.0)


# ---------------------------------------------------------------------------
# control functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """phi(x, y, z) = c with exact scaling factor alpha = 1."""

    c: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c >= 0):
            raise InputDomainError("Constant control requires c >= 0")

    @property
    def alpha(self) -> float:
        return 1.0


@dataclass(frozen=True)
class PowerSum:
    """phi(x, y, z) = eps (||x||^p + ||y||^p + ||z||^p), alpha = 3^p, p in [0, 1)."""

    eps: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps >= 0):
            raise InputDomainError("PowerSum control requires eps >= 0")
        if not (0.0 <= self.p < 1.0):
            raise InputDomainError("PowerSum exponent must satisfy 0 <= p < 1")

    @property
    def alpha(self) -> float:
        return 3.0 ** self.p


@dataclass(frozen=True)
class CustomControl:
    """User control; alpha must be supplied and is trusted for the remainder
    certificates, so phi(3x, 3y, 3z) <= alpha * phi(x, y, z) must hold."""

    evaluator: Callable[[np.ndarray, np.ndarray, np.ndarray], float]
    alpha: float
    name: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InputDomainError("custom control requires alpha > 0")


ControlFunction = Union[Constant, PowerSum, CustomControl]


def control_phi_many(phi: ControlFunction, X, Y, Z) -> np.ndarray:
    """phi over (K, d) batches of argument triples."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if isinstance(phi, Constant):
        return np.full(X.shape[0], phi.c)
    if isinstance(phi, PowerSum):
        return phi.eps * (_pow0(crisp_norm(X), phi.p)
                          + _pow0(crisp_norm(Y), phi.p)
                          + _pow0(crisp_norm(Z), phi.p))
    values = np.array([float(phi.evaluator(x, y, z)) for x, y, z in zip(X, Y, Z)])
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise InputDomainError("control function must be finite and nonnegative")
    return values


def control_phi(phi: ControlFunction, x, y, z) -> float:
    return float(control_phi_many(phi, as_point(x), as_point(y), as_point(z))[0])


# ---------------------------------------------------------------------------
# iteration and extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoppingRule:
    """When to stop the depth iteration.

    The analytic limit is replaced by: stop once successive iterates differ
    by at most ``successive_tol`` at every probe, or at ``n_max``.  The
    argument 3^n x must stay within ``argument_cap`` so double-precision
    evaluation stays trustworthy; evaluators are assumed analytic (no
    tables), and bounded trig perturbations lose phase accuracy near the
    cap but their contribution is divided by 3^n, which keeps the extracted
    map correct to tolerance.
    """

    n_max: int = 30
    successive_tol: float = 1e-10
    argument_cap: float = 1e12

    def __post_init__(self):
        if self.n_max < 1:
            raise InputDomainError("n_max must be >= 1")
        if self.successive_tol <= 0 or self.argument_cap <= 0:
            raise InputDomainError("tolerances must be positive")


def hyers_iterate(f: TestFunction, x, n: int, argument_cap: float = 1e12) -> np.ndarray:
    """f(3^n x) / 3^n with a single evaluation of f; n = 0 returns f(x)."""
    if n < 0:
        raise InputDomainError("n must be >= 0")
    pt = as_point(x)
    r = float(crisp_norm(pt))
    if r > 0 and r * 3.0 ** n > argument_cap:
        last_safe = int(math.floor(math.log(argument_cap / r) / math.log(3.0)))
        raise IterationOverflowError(
            f"3^{n} * x has norm {r * 3.0 ** n:.3g}, beyond cap {argument_cap:.3g}",
            last_safe_n=max(0, last_safe))
    scale = 3.0 ** n
    return f(scale * pt) / scale


@dataclass
class ExtractionResult:
    """Final iterates of the stabilizing iteration at each probe.

    ``stage_bound`` is the partial geometric sum sum_{j<n} alpha^j / 3^(j+1)
    at the depth actually used; it is always below its limit 1/(3 - alpha).
    """

    probes: np.ndarray        # (K, d)
    values: np.ndarray        # (K, m), approximations of the affine map
    f_at_zero: np.ndarray     # (m,)
    depth_used: int
    stage_bound: float
    converged: bool
    final_delta: float | None
    alpha: float
    overflow: bool = False

    def value_at(self, x) -> np.ndarray:
        pt = as_point(x, self.probes.shape[1])
        hits = np.nonzero(np.all(self.probes == pt, axis=1))[0]
        if hits.size == 0:
            raise InputDomainError("point is not one of the extraction probes")
        return self.values[int(hits[0])]

    def to_affine(self, name: str = "extracted-affine") -> TestFunction:
        """Least-squares linear fit through the probe values (the extracted
        map vanishes at 0, so no offset term)."""
        coef, *_ = np.linalg.lstsq(self.probes, self.values, rcond=None)
        a = coef.T
        dim_in = self.probes.shape[1]
        dim_out = self.values.shape[1]
        return TestFunction(lambda X: X @ a.T, dim_in, dim_out,
                            affine_part=(a, np.zeros(dim_out)),
                            name=name)

    def to_dict(self) -> dict:
        return {
            "probe_values": [{"probe": p, "value": v}
                             for p, v in zip(self.probes, self.values)],
            "f_at_zero": self.f_at_zero,
            "depth_used": self.depth_used,
            "stage_bound": self.stage_bound,
            "converged": self.converged,
            "final_delta": self.final_delta,
            "alpha": self.alpha,
            "overflow": self.overflow,
        }


def extract_affine(f: TestFunction, probes, rule: StoppingRule | None = None,
                   alpha: float = 1.0) -> ExtractionResult:
    """Iterate g(3^n x)/3^n (g = f - f(0)) at all probes until the stopping
    rule fires.

    An argument overflow stops the whole iteration early and marks the
    result non-converged while keeping the last safe iterates.  ``alpha``
    is only used to report the stage bound (1.0 fits bounded perturbations).
    """
    rule = rule or StoppingRule()
    P = np.atleast_2d(np.asarray(probes, dtype=float))
    if P.shape[0] == 0:
        raise InputDomainError("probes must be nonempty")
    if not 0 < alpha < 3:
        raise InputDomainError("alpha must lie in (0, 3)")
    f0 = f(np.zeros(f.dim_in))
    prev = f(P) - f0
    max_norm = float(crisp_norm(P).max())
    depth = 0
    delta: float | None = None
    converged = False
    overflow = False
    for n in range(1, rule.n_max + 1):
        scale = 3.0 ** n
        if max_norm * scale > rule.argument_cap:
            overflow = True
            break
        cur = (f(scale * P) - f0) / scale
        delta = float(crisp_norm(cur - prev).max())
        prev = cur
        depth = n
        if delta <= rule.successive_tol:
            converged = True
            break
    return ExtractionResult(P, prev, f0, depth, stage_error_bound(alpha, depth),
                            converged and not overflow, delta, alpha, overflow)


def stage_error_bound(alpha: float, n: int | None = None) -> float:
    """Partial sum  sum_{j=0}^{n-1} alpha^j / 3^(j+1);  n=None gives the
    limit 1/(3 - alpha)."""
    if not (math.isfinite(alpha) and 0 < alpha < 3):
        raise InputDomainError("alpha must lie in (0, 3)")
    if n is None or (isinstance(n, float) and math.isinf(n)):
        return 1.0 / (3.0 - alpha)
    if n < 0:
        raise InputDomainError("n must be >= 0")
    q = alpha / 3.0
    total = 0.0
    term = 1.0 / 3.0
    for _ in range(int(n)):
        total += term
        term *= q
    return total


# ---------------------------------------------------------------------------
# the summed control series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesValue:
    value: float
    depth: int
    remainder_bound: float


def _series_ratio(phi: ControlFunction) -> float:
    q = phi.alpha / 3.0
    if q >= 1.0:
        raise DivergentSeriesError(
            f"control scaling alpha = {phi.alpha:g} >= 3; the series diverges")
    return q


def phi_tilde_partial(phi: ControlFunction, x, y, z, n_terms: int
                      ) -> tuple[float, float]:
    """First ``n_terms`` terms of  sum_n phi(3^n x, 3^n y, 3^n z) / 3^n  and
    the certified geometric remainder bound after them."""
    if n_terms < 0:
        raise InputDomainError("n_terms must be >= 0")
    q = _series_ratio(phi)
    px, py, pz = as_point(x), as_point(y), as_point(z)
    max_norm = float(max(crisp_norm(px), crisp_norm(py), crisp_norm(pz)))
    term = control_phi(phi, px, py, pz)   # term 0
    if n_terms == 0:
        return 0.0, term / (1.0 - q)
    total = 0.0
    for n in range(n_terms):
        if n > 0:
            scale = 3.0 ** n
            if max_norm == 0.0 or scale * max_norm <= _OVERFLOW_GUARD:
                term = control_phi(phi, scale * px, scale * py, scale * pz) / scale
            elif isinstance(phi, (Constant, PowerSum)):
                term = term * q    # exact scaling; arguments would overflow
            else:
                raise InputDomainError(
                    "custom control did not converge before argument overflow")
        total += term
    return total, term * q / (1.0 - q)


def phi_tilde(phi: ControlFunction, x, y, z, tail_tol: float = 1e-10,
              max_terms: int = 2000) -> SeriesValue:
    """Truncated series with a certified remainder at most ``tail_tol``."""
    if tail_tol <= 0:
        raise InputDomainError("tail_tol must be positive")
    q = _series_ratio(phi)
    px, py, pz = as_point(x), as_point(y), as_point(z)
    max_norm = float(max(crisp_norm(px), crisp_norm(py), crisp_norm(pz)))
    total = 0.0
    term = 0.0
    for n in range(max_terms):
        scale = 3.0 ** n
        if n == 0 or max_norm == 0.0 or scale * max_norm <= _OVERFLOW_GUARD:
            term = control_phi(phi, scale * px, scale * py, scale * pz) / scale
        elif isinstance(phi, (Constant, PowerSum)):
            term = term * q
        else:
            raise InputDomainError(
                "custom control did not converge before argument overflow")
        total += term
        remainder = term * q / (1.0 - q)
        if remainder <= tail_tol:
            return SeriesValue(total, n + 1, remainder)
    raise InputDomainError(f"series did not reach tail_tol within {max_terms} terms")


def geometric_t_grid(t_min: float = 1e-3, decades: int = 6,
                     per_decade: int = 40) -> np.ndarray:
    """Geometric t grid (memberships vary on a log scale): ``decades *
    per_decade`` points t_min * 10^(k / per_decade)."""
    if t_min <= 0:
        raise InputDomainError("t_min must be positive")
    k = np.arange(decades * per_decade)
    return t_min * 10.0 ** (k / per_decade)


# ---------------------------------------------------------------------------
# membership helpers shared by the verifiers
# ---------------------------------------------------------------------------

def _vector_membership_series(spec: NormSpec, rows: np.ndarray,
                              t_grid: np.ndarray) -> np.ndarray:
    """(K, T) memberships N(row_i, t_j).  Custom norms fall back to loops."""
    t_grid = np.asarray(t_grid, dtype=float)
    if isinstance(spec, CustomNorm):
        return np.stack([_memberships_rows(spec, rows, t) for t in t_grid], axis=1)
    r = crisp_norm(np.atleast_2d(rows), spec.base_norm)
    return _radius_membership(spec, r[:, None], t_grid[None, :])


def _scalar_membership_series(spec: NormSpec, values: np.ndarray,
                              t_grid: np.ndarray) -> np.ndarray:
    """(K, T) memberships of nonnegative scalars embedded as 1-d vectors."""
    values = np.asarray(values, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if isinstance(spec, CustomNorm):
        rows = values.reshape(-1, 1)
        return np.stack([_memberships_rows(spec, rows, t) for t in t_grid], axis=1)
    return _radius_membership(spec, values[:, None], t_grid[None, :])


def _select_rows(ext: ExtractionResult, probes) -> np.ndarray:
    if probes is None:
        return np.arange(ext.probes.shape[0])
    P = np.atleast_2d(np.asarray(probes, dtype=float))
    idx = []
    for row in P:
        hits = np.nonzero(np.all(ext.probes == row, axis=1))[0]
        if hits.size == 0:
            raise InputDomainError(
                f"probe {row.tolist()} is not part of the extraction result")
        idx.append(int(hits[0]))
    return np.asarray(idx, dtype=int)


def _base_report(seed: int, depth_used: int, stage_bound: float) -> dict:
    return {
        "seed": seed,
        "config_digest": "",
        "depth_used": depth_used,
        "stage_bound": stage_bound,
    }


# ---------------------------------------------------------------------------
# non-uniform verifiers
# ---------------------------------------------------------------------------

@dataclass
class HypothesisReport:
    passed: bool
    worst_margin: float
    witness_triple: list | None
    witness_t: float | None
    scaling_ok: bool
    scaling_max_error: float
    n_triples: int
    seed: int
    t_grid: np.ndarray
    per_t_min_margin: np.ndarray

    def to_dict(self) -> dict:
        out = _base_report(self.seed, 0, 0.0)
        out.update({
            "check_name": "hypothesis_nonuniform",
            "pass": self.passed,
            "worst_margin": self.worst_margin,
            "witness_triple": self.witness_triple,
            "witness_t": self.witness_t,
            "scaling_ok": self.scaling_ok,
            "scaling_max_error": self.scaling_max_error,
            "n_triples": self.n_triples,
            "t_grid": self.t_grid,
            "per_t_min_margin": self.per_t_min_margin,
        })
        return out


def verify_hypothesis_nonuniform(f: TestFunction, phi: ControlFunction,
                                 norm: NormSpec, norm_prime: NormSpec,
                                 triples: TripleSample, t_grid=None,
                                 margin_tol: float = 1e-9) -> HypothesisReport:
    """Check N(D f(x,y,z), t) >= N'(phi(x,y,z), t) at every (triple, t),
    plus the declared scaling of phi along the first argument.

    Shipped controls satisfy phi(3x,0,0) = alpha phi(x,0,0) exactly and are
    checked for equality; custom controls are checked in the membership
    inequality form N'(phi(3x,0,0), t) >= N'(alpha phi(x,0,0), t).
    """
    t_grid = geometric_t_grid() if t_grid is None else np.asarray(t_grid, float)
    D = eval_D_many(f, triples.x, triples.y, triples.z)
    phiv = control_phi_many(phi, triples.x, triples.y, triples.z)

    zeros = np.zeros_like(triples.x)
    lhs_scale = control_phi_many(phi, 3.0 * triples.x, zeros, zeros)
    rhs_scale = phi.alpha * control_phi_many(phi, triples.x, zeros, zeros)
    if isinstance(phi, CustomControl):
        lhs_m = _scalar_membership_series(norm_prime, lhs_scale, t_grid)
        rhs_m = _scalar_membership_series(norm_prime, rhs_scale, t_grid)
        scaling_err = float(np.max(rhs_m - lhs_m, initial=0.0))
        scaling_ok = scaling_err <= margin_tol
    else:
        scaling_err = float(np.max(np.abs(lhs_scale - rhs_scale)
                                   / (1.0 + np.abs(rhs_scale))))
        scaling_ok = scaling_err <= 1e-12

    lhs = _vector_membership_series(norm, D, t_grid)
    rhs = _scalar_membership_series(norm_prime, phiv, t_grid)
    margins = lhs - rhs
    flat = int(np.argmin(margins))
    i, j = np.unravel_index(flat, margins.shape)
    worst = float(margins[i, j])
    passed = worst >= -margin_tol and scaling_ok
    return HypothesisReport(passed, worst, triples.triples[i].tolist(),
                            float(t_grid[j]), scaling_ok, scaling_err,
                            len(triples), triples.seed, t_grid,
                            margins.min(axis=0))


@dataclass
class BoundReport:
    passed: bool
    worst_margin: float
    witness_probe: list | None
    witness_t: float | None
    alpha: float
    residuals: np.ndarray
    bounds: np.ndarray              # phi(x,0,0) / (3 - alpha) per probe
    crisp_reduction: bool
    crisp_ok: bool | None
    t_grid: np.ndarray
    per_t_min_margin: np.ndarray
    lhs_at_worst: np.ndarray
    rhs_at_worst: np.ndarray
    probes: np.ndarray
    depth_used: int
    stage_bound: float
    seed: int = 0

    def to_dict(self) -> dict:
        out = _base_report(self.seed, self.depth_used, self.stage_bound)
        out.update({
            "check_name": "bound_nonuniform",
            "pass": self.passed,
            "worst_margin": self.worst_margin,
            "witness_probe": self.witness_probe,
            "witness_t": self.witness_t,
            "alpha": self.alpha,
            "residuals": self.residuals,
            "bounds": self.bounds,
            "crisp_reduction": self.crisp_reduction,
            "crisp_ok": self.crisp_ok,
            "t_grid": self.t_grid,
            "per_t_min_margin": self.per_t_min_margin,
            "lhs_at_worst": self.lhs_at_worst,
            "rhs_at_worst": self.rhs_at_worst,
            "probes": self.probes,
        })
        return out


def verify_bound_nonuniform(f: TestFunction, ext: ExtractionResult,
                            phi: ControlFunction, norm: NormSpec,
                            norm_prime: NormSpec, alpha: float,
                            probes=None, t_grid=None,
                            margin_tol: float = 1e-9) -> BoundReport:
    """Check N(f(x) - A(x) - f(0), t) >= N'(phi(x,0,0), (3 - alpha) t) at
    every (probe, t).

    When N and N' are the same CrispInduced norm the membership inequality
    is equivalent to the crisp bound ||f - A - f(0)|| <= phi(x,0,0)/(3-alpha),
    which is then checked and reported as well.
    """
    if not ext.converged:
        raise NonConvergedError("bound verification requires a converged extraction")
    if not 0 < alpha < 3:
        raise InputDomainError("alpha must lie in (0, 3)")
    t_grid = geometric_t_grid() if t_grid is None else np.asarray(t_grid, float)
    idx = _select_rows(ext, probes)
    P = ext.probes[idx]
    res = f(P) - ext.values[idx] - ext.f_at_zero
    rn = crisp_norm(res, getattr(norm, "base_norm", "euclidean"))
    zeros = np.zeros_like(P)
    phiv = control_phi_many(phi, P, zeros, zeros)
    factor = 3.0 - alpha

    lhs = _vector_membership_series(norm, res, t_grid)
    rhs = _scalar_membership_series(norm_prime, phiv, factor * t_grid)
    margins = lhs - rhs
    i, j = np.unravel_index(int(np.argmin(margins)), margins.shape)
    worst = float(margins[i, j])
    passed = worst >= -margin_tol

    crisp = (isinstance(norm, CrispInduced) and isinstance(norm_prime, CrispInduced)
             and norm.p == norm_prime.p and norm.base_norm == norm_prime.base_norm)
    bounds = phiv / factor
    crisp_ok = bool(np.all(rn <= bounds + 1e-12)) if crisp else None

    worst_probe = int(np.argmin(margins.min(axis=1)))
    return BoundReport(passed, worst, P[i].tolist(), float(t_grid[j]), alpha,
                       rn, bounds, crisp, crisp_ok, t_grid, margins.min(axis=0),
                       lhs[worst_probe], rhs[worst_probe], P,
                       ext.depth_used, ext.stage_bound)


# ---------------------------------------------------------------------------
# uniform verifiers
# ---------------------------------------------------------------------------

@dataclass
class UniformBoundReport:
    passed: bool
    hypothesis_ok: bool
    hypothesis_min_membership: float
    hypothesis_witness: list | None
    conclusion_ok: bool
    conclusion_min_membership: float
    conclusion_witness: list | None
    delta: float
    alpha_level: float
    depth_used: int
    stage_bound: float
    seed: int = 0

    def to_dict(self) -> dict:
        out = _base_report(self.seed, self.depth_used, self.stage_bound)
        out.update({
            "check_name": "bound_uniform",
            "pass": self.passed,
            "hypothesis_ok": self.hypothesis_ok,
            "hypothesis_min_membership": self.hypothesis_min_membership,
            "hypothesis_witness": self.hypothesis_witness,
            "conclusion_ok": self.conclusion_ok,
            "conclusion_min_membership": self.conclusion_min_membership,
            "conclusion_witness": self.conclusion_witness,
            "delta": self.delta,
            "alpha_level": self.alpha_level,
        })
        return out


def verify_bound_uniform(f: TestFunction, ext: ExtractionResult,
                         phi: ControlFunction, norm: NormSpec, delta: float,
                         alpha_level: float, probes=None,
                         triples: TripleSample | None = None,
                         tail_tol: float = 1e-10) -> UniformBoundReport:
    """First check N(D f(x,y,z), delta phi(x,y,z)) > alpha_level on the
    triple sample, then N(f(x) - A(x) - f(0), (delta/3) phi~(0,0,x)) >
    alpha_level at every probe.

    Comparisons are strict, so alpha_level = 1 fails vacuously (membership
    never exceeds 1).  Triples/probes where both the residual and the
    control vanish are skipped: the inequality degenerates to N(0, 0),
    which axiom N1 pins to 0, so the literal form is unsatisfiable there
    and carries no information.
    """
    if delta <= 0:
        raise InputDomainError("delta must be positive")
    if not 0 < alpha_level <= 1:
        raise InputDomainError("alpha_level must lie in (0, 1]")
    if not ext.converged:
        raise NonConvergedError("uniform bound requires a converged extraction")
    triples = triples or standard_triples(f.dim_in, 400, 2.0, seed=51)

    D = eval_D_many(f, triples.x, triples.y, triples.z)
    dn = crisp_norm(D)
    phiv = control_phi_many(phi, triples.x, triples.y, triples.z)
    vacuous = (phiv <= 0.0) & (dn <= 1e-12)
    memb_h = _memberships_rows(norm, D, delta * phiv)
    active = ~vacuous
    hyp_min = float(memb_h[active].min()) if np.any(active) else 1.0
    hyp_wit = triples.triples[int(np.argmin(np.where(active, memb_h, np.inf)))]\
        .tolist() if np.any(active) else None
    hypothesis_ok = hyp_min > alpha_level

    idx = _select_rows(ext, probes)
    P = ext.probes[idx]
    res = f(P) - ext.values[idx] - ext.f_at_zero
    rn = crisp_norm(res)
    zero = np.zeros(f.dim_in)
    phit = np.array([phi_tilde(phi, zero, zero, p, tail_tol).value for p in P])
    vac2 = (phit <= 0.0) & (rn <= 1e-12)
    memb_c = _memberships_rows(norm, res, (delta / 3.0) * phit)
    active2 = ~vac2
    concl_min = float(memb_c[active2].min()) if np.any(active2) else 1.0
    concl_wit = P[int(np.argmin(np.where(active2, memb_c, np.inf)))].tolist() \
        if np.any(active2) else None
    conclusion_ok = concl_min > alpha_level

    return UniformBoundReport(hypothesis_ok and conclusion_ok, hypothesis_ok,
                              hyp_min, hyp_wit, conclusion_ok, concl_min,
                              concl_wit, delta, alpha_level,
                              ext.depth_used, ext.stage_bound, triples.seed)


@dataclass
class UniformLimitReport:
    passed: bool
    ratio_sup: float
    worst_probe: list | None
    findings: list
    pairs: list
    residuals: np.ndarray
    phi_tilde_values: np.ndarray
    t_schedule: np.ndarray
    eps_schedule: np.ndarray
    memberships_at_worst: np.ndarray
    probes: np.ndarray
    depth_used: int
    stage_bound: float
    seed: int = 0

    def to_dict(self) -> dict:
        out = _base_report(self.seed, self.depth_used, self.stage_bound)
        out.update({
            "check_name": "uniform_limit",
            "pass": self.passed,
            "ratio_sup": self.ratio_sup,
            "worst_probe": self.worst_probe,
            "findings": self.findings,
            "pairs": self.pairs,
            "residuals": self.residuals,
            "phi_tilde_values": self.phi_tilde_values,
            "t_schedule": self.t_schedule,
            "eps_schedule": self.eps_schedule,
            "memberships_at_worst": self.memberships_at_worst,
            "probes": self.probes,
        })
        return out


def verify_uniform_limit(f: TestFunction, ext: ExtractionResult,
                         phi: ControlFunction, norm: NormSpec,
                         t_schedule, eps_schedule,
                         ratio_cap: float = 1e6,
                         residual_floor: float = 1e-9,
                         phi_tilde_fn: Callable[[np.ndarray], np.ndarray] | None = None,
                         tail_tol: float = 1e-10,
                         margin_tol: float = 1e-9) -> UniformLimitReport:
    """Finite-sample surrogate for the uniform limit of N(f - A - f(0), t phi~).

    The sup over probes of residual / phi~(0,0,x) is recorded (probes where
    both vanish are excluded).  A probe whose control budget is zero, or
    effectively zero (ratio above ``ratio_cap``), while the residual is not,
    is a uniformity-violation finding: no t can repair it uniformly.  For
    each scheduled (t, eps) pair with t past the ratio-based threshold
    ratio_sup * tau(eps), the minimum membership must reach 1 - eps.
    """
    if not ext.converged:
        raise NonConvergedError("uniform limit requires a converged extraction")
    t_schedule = np.asarray(list(t_schedule), dtype=float)
    eps_schedule = np.asarray(list(eps_schedule), dtype=float)
    if t_schedule.size == 0 or t_schedule.size != eps_schedule.size:
        raise InputDomainError("t_schedule and eps_schedule must pair up nonempty")
    if np.any(np.diff(t_schedule) <= 0) or np.any(t_schedule <= 0):
        raise InputDomainError("t_schedule must be positive and increasing")
    if np.any((eps_schedule <= 0) | (eps_schedule >= 1)):
        raise InputDomainError("eps_schedule values must lie in (0, 1)")

    P = ext.probes
    res = f(P) - ext.values - ext.f_at_zero
    rn = crisp_norm(res)
    if phi_tilde_fn is not None:
        phit = np.asarray(phi_tilde_fn(P), dtype=float)
    else:
        zero = np.zeros(f.dim_in)
        phit = np.array([phi_tilde(phi, zero, zero, p, tail_tol).value for p in P])
    if np.any(phit < 0):
        raise InputDomainError("phi~ must be nonnegative")

    findings = []
    flagged = np.zeros(len(P), dtype=bool)
    for i in range(len(P)):
        if rn[i] <= residual_floor:
            continue
        if phit[i] <= 0.0:
            flagged[i] = True
            findings.append({
                "kind": "uniformity-violation",
                "probe": P[i].tolist(),
                "residual": float(rn[i]),
                "phi_tilde": float(phit[i]),
                "detail": "control series vanishes here but the residual does not",
            })
        elif rn[i] / phit[i] > ratio_cap:
            flagged[i] = True
            findings.append({
                "kind": "uniformity-violation",
                "probe": P[i].tolist(),
                "residual": float(rn[i]),
                "phi_tilde": float(phit[i]),
                "ratio": float(rn[i] / phit[i]),
                "detail": f"residual / phi~ exceeds the cap {ratio_cap:g}; the "
                          "control budget is effectively zero at this probe",
            })

    excluded = (phit <= 0.0) & (rn <= residual_floor)
    valid = ~excluded & ~flagged
    ratios = np.zeros(len(P))
    has_ratio = valid & (phit > 0.0)
    ratios[has_ratio] = rn[has_ratio] / phit[has_ratio]
    ratio_sup = float(ratios.max()) if np.any(has_ratio) else 0.0
    worst_idx = int(np.argmax(ratios)) if np.any(has_ratio) else None

    pairs = []
    all_ok = True
    for t, eps in zip(t_schedule, eps_schedule):
        threshold = ratio_sup * membership_threshold(norm, float(eps), f.dim_out)
        memb = _memberships_rows(norm, res, t * phit)
        if np.any(valid):
            min_memb = float(memb[valid].min())
        else:
            min_memb = 1.0
        enforced = t >= threshold
        ok = (not enforced) or (min_memb >= 1.0 - eps - margin_tol)
        all_ok = all_ok and ok
        pairs.append({"t": float(t), "eps": float(eps),
                      "threshold": float(threshold), "enforced": bool(enforced),
                      "min_membership": min_memb, "ok": bool(ok)})

    probe_for_series = worst_idx if worst_idx is not None else 0
    series = np.array([
        float(_memberships_rows(norm, res[probe_for_series:probe_for_series + 1],
                                t * phit[probe_for_series])[0])
        for t in t_schedule])

    passed = (not findings) and all_ok
    worst_probe = P[probe_for_series].tolist() if len(P) else None
    return UniformLimitReport(passed, ratio_sup, worst_probe, findings, pairs,
                              rn, phit, t_schedule, eps_schedule, series, P,
                              ext.depth_used, ext.stage_bound)


# ---------------------------------------------------------------------------
# uniqueness and the power-control corollary
# ---------------------------------------------------------------------------

@dataclass
class UniquenessResult:
    max_discrepancy: float
    discrepancies: np.ndarray
    probes: np.ndarray
    ext1: ExtractionResult
    ext2: ExtractionResult

    def to_dict(self) -> dict:
        out = _base_report(0, max(self.ext1.depth_used, self.ext2.depth_used),
                           max(self.ext1.stage_bound, self.ext2.stage_bound))
        out.update({
            "check_name": "uniqueness",
            "max_discrepancy": self.max_discrepancy,
            "discrepancies": self.discrepancies,
            "probes": self.probes,
        })
        return out


def uniqueness_probe(f1: TestFunction, f2: TestFunction, probes,
                     rule: StoppingRule | None = None,
                     alpha: float = 1.0) -> UniquenessResult:
    """Extract from both functions and report sup ||A1(x) - A2(x)|| over the
    probes.  Certified perturbations of one affine core must agree."""
    ext1 = extract_affine(f1, probes, rule, alpha)
    ext2 = extract_affine(f2, probes, rule, alpha)
    if not (ext1.converged and ext2.converged):
        raise NonConvergedError("uniqueness probe requires both extractions to converge")
    disc = crisp_norm(ext1.values - ext2.values)
    return UniquenessResult(float(disc.max()), disc, ext1.probes, ext1, ext2)


@dataclass
class Corollary53Report:
    passed: bool
    eps: float
    p: float
    factor_at_unit: float
    ratio_sup: float
    series_vs_closed_max_err: float
    hypothesis: HypothesisReport
    extraction: ExtractionResult
    uniform_limit: UniformLimitReport

    def to_dict(self) -> dict:
        out = _base_report(self.hypothesis.seed, self.extraction.depth_used,
                           self.extraction.stage_bound)
        out.update({
            "check_name": "corollary53",
            "pass": self.passed,
            "eps": self.eps,
            "p": self.p,
            "factor_at_unit": self.factor_at_unit,
            "ratio_sup": self.ratio_sup,
            "series_vs_closed_max_err": self.series_vs_closed_max_err,
            "hypothesis": self.hypothesis.to_dict(),
            "extraction": self.extraction.to_dict(),
            "uniform_limit": self.uniform_limit.to_dict(),
        })
        return out


def corollary53_suite(eps: float, p: float, f: TestFunction, probes,
                      t_schedule, eps_schedule=None, *,
                      norm: NormSpec | None = None,
                      norm_prime: NormSpec | None = None,
                      triples: TripleSample | None = None,
                      rule: StoppingRule | None = None,
                      t_grid=None, ratio_cap: float = 1e6,
                      margin_tol: float = 1e-9) -> Corollary53Report:
    """Power-control stability end to end: hypothesis with the power-sum
    control, extraction, and the uniform limit against the closed form

        phi~(0,0,x) = eps 3^(1-p) ||x||^p / (3^(1-p) - 1).

    Requires a function certified with growth profile ||eta(x)|| <=
    eps' ||x||^p and eps >= eps' (3^(p+1) + 9), the certified constant that
    makes the hypothesis provably hold.
    """
    if not 0.0 <= p < 1.0:
        raise InputDomainError("the power-control series requires 0 <= p < 1")
    if eps < 0:
        raise InputDomainError("eps must be nonnegative")
    budget = f.budget
    if budget is None or budget.growth_amplitude is None:
        raise InputDomainError("function must carry a certified growth budget")
    if budget.growth_exponent is None or abs(budget.growth_exponent - p) > 1e-12:
        raise InputDomainError("budget exponent must match p")
    needed = budget.growth_amplitude * (3.0 ** (p + 1) + 9.0)
    if eps < needed - 1e-12:
        raise InputDomainError(
            f"eps = {eps:g} below the certified constant {needed:g}")

    norm = norm or CrispInduced()
    norm_prime = norm_prime or norm
    triples = triples or standard_triples(f.dim_in, 2000, 2.0, seed=53)
    # growth perturbations decay like 3^(-n(1-p)); the depth reachable under
    # the argument cap limits the achievable successive tolerance
    rule = rule or StoppingRule(n_max=25, successive_tol=1e-6)
    if eps_schedule is None:
        eps_schedule = [0.01] * len(list(t_schedule))

    control = PowerSum(eps, p)
    hyp = verify_hypothesis_nonuniform(f, control, norm, norm_prime, triples,
                                       t_grid, margin_tol)
    ext = extract_affine(f, probes, rule, alpha=3.0 ** p)

    geom = 3.0 ** (1.0 - p)
    factor = geom / (geom - 1.0)

    def closed_form(P):
        return eps * factor * _pow0(crisp_norm(np.atleast_2d(P)), p)

    zero = np.zeros(f.dim_in)
    closed_vals = closed_form(ext.probes)
    max_err = 0.0
    for i in range(min(len(ext.probes), 5)):
        series = phi_tilde(control, zero, zero, ext.probes[i], 1e-12).value
        max_err = max(max_err, abs(series - closed_vals[i]) / (1.0 + closed_vals[i]))
    if max_err > 1e-8:
        raise InputDomainError(
            f"closed form disagrees with the summed series (err {max_err:g})")

    ul = verify_uniform_limit(f, ext, control, norm, t_schedule, eps_schedule,
                              ratio_cap=ratio_cap, phi_tilde_fn=closed_form,
                              margin_tol=margin_tol)
    passed = hyp.passed and ext.converged and ul.passed
    return Corollary53Report(passed, eps, p, eps * factor, ul.ratio_sup,
                             max_err, hyp, ext, ul)
