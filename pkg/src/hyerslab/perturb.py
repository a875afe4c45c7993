"""Reproducible test functions: exact solutions, certified near-solutions,
and deliberate violators.

Every generated f = affine + eta comes with a machine-checkable budget on
||eta|| and (except for violators) the smallest shipped control function
certified to dominate its defect:

  bounded eta:   |D eta| <= 12 sup||eta||        (coefficient sum of the
                 seven defect terms, 1+1+1+1+1+1+6)
  growth eta:    |D eta(x,y,z)| <= a (3^(p+1) + 9)(||x||^p + ||y||^p +
                 ||z||^p)  for ||eta(x)|| <= a ||x||^p with p < 1, via
                 subadditivity of t -> t^p

These constants are conservative, not tight; the verifiers measure actual
margins so the looseness stays visible.  Perturbations are smooth closed
forms (sine/cosine based) so the 3^n-argument iteration stays analytically
evaluatable.  Generators are pure given (spec, seed): the same seed gives
bitwise identical evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputDomainError
from .functional_eq import PerturbationBudget, TestFunction
from .fuzzy_norm import crisp_norm
from .hyers import Constant, ControlFunction, PowerSum

BOUNDED_DEFECT_FACTOR = 12.0


def _growth_defect_factor(p: float) -> float:
    return 3.0 ** (p + 1.0) + 9.0


# ---------------------------------------------------------------------------
# perturbation specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SineBounded:
    """eta(x) = amplitude * sin(frequency * <w, x> + phase) * u;
    sup||eta|| = amplitude exactly."""

    amplitude: float
    frequency: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise InputDomainError("amplitude must be >= 0")


@dataclass(frozen=True)
class PowerGrowth:
    """eta(x) = amplitude * ||x||^p * cos(frequency * ||x|| + phase) * u;
    ||eta(x)|| <= amplitude * ||x||^p with exponent p < 1."""

    amplitude: float
    exponent: float
    frequency: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise InputDomainError("amplitude must be >= 0")
        if not 0.0 <= self.exponent < 1.0:
            raise InputDomainError("exponent must satisfy 0 <= p < 1")


@dataclass(frozen=True)
class ConstantOffset:
    """An offset whose envelope is the constant ``amplitude`` at every scale:
    eta(x) = amplitude * cos(frequency * log||x|| + phase) * u, eta(0) = 0.

    A literally constant eta would be absorbed exactly by the f(0)
    subtraction and leave no residual at all; the scale-free oscillation
    keeps the offset visible to the verifiers at every probe radius, which
    is what makes this family the canonical mismatch against decaying
    power controls near x = 0.
    """

    amplitude: float
    frequency: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise InputDomainError("amplitude must be >= 0")


@dataclass(frozen=True)
class Violator:
    """A steep sign-like bump eta(x) = amplitude * tanh(steepness * <w, x>) * u.

    Bounded by ``amplitude`` but engineered so its defect approaches
    8 * amplitude on mixed-sign triples, far above what tighter budgets
    admit; returned without a certificate.
    """

    amplitude: float
    steepness: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise InputDomainError("amplitude must be >= 0")
        if self.steepness <= 0:
            raise InputDomainError("steepness must be positive")


PerturbationSpec = Union[SineBounded, PowerGrowth, ConstantOffset, Violator]

_FAMILY_NAMES = {
    SineBounded: "sine-bounded",
    PowerGrowth: "power-growth",
    ConstantOffset: "constant-offset",
    Violator: "violator",
}


def family_name(spec: PerturbationSpec) -> str:
    return _FAMILY_NAMES[type(spec)]


def perturbation_to_dict(spec: PerturbationSpec) -> dict:
    out = {"family": family_name(spec), "amplitude": spec.amplitude,
           "seed": spec.seed}
    if isinstance(spec, (SineBounded, PowerGrowth, ConstantOffset)):
        out["frequency"] = spec.frequency
    if isinstance(spec, PowerGrowth):
        out["exponent"] = spec.exponent
    if isinstance(spec, Violator):
        out["steepness"] = spec.steepness
    return out


def perturbation_from_dict(d: dict) -> PerturbationSpec:
    kind = d.get("family")
    common = {"amplitude": d["amplitude"], "seed": int(d.get("seed", 0))}
    if kind == "sine-bounded":
        return SineBounded(frequency=d.get("frequency", 1.0), **common)
    if kind == "power-growth":
        return PowerGrowth(exponent=d["exponent"],
                           frequency=d.get("frequency", 1.0), **common)
    if kind == "constant-offset":
        return ConstantOffset(frequency=d.get("frequency", 1.0), **common)
    if kind == "violator":
        return Violator(steepness=d.get("steepness", 8.0), **common)
    raise InputDomainError(f"unknown perturbation family {kind!r}")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _directions(seed: int, dim_in: int, dim_out: int):
    """Domain direction w, codomain direction u, phase.  Seed 0 is the
    canonical axis-aligned choice (w = e1, u = e1, phase 0), so the d = 1
    worked examples come out as plain sin(x)/cos(x)."""
    if seed == 0:
        w = np.zeros(dim_in)
        w[0] = 1.0
        u = np.zeros(dim_out)
        u[0] = 1.0
        return w, u, 0.0
    rng = np.random.default_rng(seed)
    w = rng.normal(size=dim_in)
    w /= np.linalg.norm(w)
    u = rng.normal(size=dim_out)
    u /= np.linalg.norm(u)
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    return w, u, phase


def _eta_evaluator(spec: PerturbationSpec, dim_in: int, dim_out: int):
    w, u, phase = _directions(spec.seed, dim_in, dim_out)
    amp = spec.amplitude
    if isinstance(spec, SineBounded):
        freq = spec.frequency

        def eta(X):
            return amp * np.sin(freq * (X @ w) + phase)[:, None] * u
    elif isinstance(spec, PowerGrowth):
        freq, p = spec.frequency, spec.exponent

        def eta(X):
            r = crisp_norm(X)
            envelope = np.where(r > 0.0, r ** p, 0.0)
            return amp * (envelope * np.cos(freq * r + phase))[:, None] * u
    elif isinstance(spec, ConstantOffset):
        freq = spec.frequency

        def eta(X):
            r = crisp_norm(X)
            osc = np.zeros_like(r)
            nz = r > 0.0
            osc[nz] = np.cos(freq * np.log(r[nz]) + phase)
            return amp * osc[:, None] * u
    elif isinstance(spec, Violator):
        beta = spec.steepness

        def eta(X):
            return amp * np.tanh(beta * (X @ w))[:, None] * u
    else:
        raise InputDomainError(f"unknown perturbation spec {spec!r}")
    return eta


def make_affine(a, b) -> TestFunction:
    """Exact solution x -> a x + b with a zero perturbation budget."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InputDomainError("affine part must be finite")
    if a.shape[0] != b.shape[0]:
        raise InputDomainError("a and b disagree on the output dimension")
    m, d = a.shape

    def ev(X):
        return X @ a.T + b

    return TestFunction(ev, d, m, affine_part=(a, b),
                        budget=PerturbationBudget(sup_bound=0.0), name="affine")


@dataclass
class CertifiedPerturbation:
    """A generated test function together with the control certified to
    dominate its defect.  ``certified`` is False for violators, whose
    control slot is empty on purpose."""

    fn: TestFunction
    control: ControlFunction | None
    certified: bool


def make_perturbed_affine(a, b, spec: PerturbationSpec) -> CertifiedPerturbation:
    """f = affine + eta plus the smallest shipped control certified to
    dominate D f (which equals D eta, since the defect kills affine parts)."""
    base = make_affine(a, b)
    a_mat, b_vec = base.affine_part
    m, d = a_mat.shape
    eta = _eta_evaluator(spec, d, m)

    def ev(X):
        return X @ a_mat.T + b_vec + eta(X)

    if isinstance(spec, PowerGrowth):
        budget = PerturbationBudget(growth_amplitude=spec.amplitude,
                                    growth_exponent=spec.exponent)
        control: ControlFunction | None = PowerSum(
            spec.amplitude * _growth_defect_factor(spec.exponent), spec.exponent)
        certified = True
    elif isinstance(spec, Violator):
        budget = PerturbationBudget(sup_bound=spec.amplitude)
        control = None
        certified = False
    else:
        budget = PerturbationBudget(sup_bound=spec.amplitude)
        control = Constant(BOUNDED_DEFECT_FACTOR * spec.amplitude)
        certified = True

    fn = TestFunction(ev, d, m, affine_part=(a_mat, b_vec), budget=budget,
                      name=f"{family_name(spec)}@{spec.seed}")
    return CertifiedPerturbation(fn, control, certified)


_VIOLATOR_KINDS = ("quadratic", "cubic", "absolute-value")


def make_violator(kind: str, dim: int = 1) -> TestFunction:
    """Named non-solutions with small canonical witnesses:

      quadratic       f(x) = (sum x_i)^2,  D f(e1, 0, 0) = 6
      cubic           f(x) = (sum x_i)^3,  f(3 e1) = 27 f(e1) != 3 f(e1)
      absolute-value  f(x) = |sum x_i|,    oddness fails at e1
    """
    if kind not in _VIOLATOR_KINDS:
        raise InputDomainError(f"violator kind must be one of {_VIOLATOR_KINDS}")
    if kind == "quadratic":
        def ev(X):
            return (X.sum(axis=1) ** 2)[:, None]
    elif kind == "cubic":
        def ev(X):
            return (X.sum(axis=1) ** 3)[:, None]
    else:
        def ev(X):
            return np.abs(X.sum(axis=1))[:, None]
    return TestFunction(ev, dim, 1, name=f"violator-{kind}")
