"""Fuzzy norms on small real vector spaces, plus their axiom checker.

A fuzzy norm N maps a vector x and a real t to a membership value in
[0, 1]: the degree to which x is judged to fit inside radius t.  Larger
is "more certainly within".  The six axioms checked here:

  N1  N(x, t) = 0 whenever t <= 0
  N2  x = 0  iff  N(x, t) = 1 for every t > 0
  N3  N(c x, t) = N(x, t / |c|) for c != 0
  N4  N(x + y, t + s) >= min(N(x, t), N(y, s))
  N5  N(x, .) is nondecreasing and tends to 1 as t -> infinity
  N6  for x != 0, N(x, .) is continuous

N2, N5 and N6 are not decidable from finitely many samples; the checker
uses the strongest finite surrogates (see ``check_axioms``).  Everything
in this module is pure, so concurrent read-only use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InputDomainError
from .reporting import sha256_digest

EXACT_TOL = 1e-12          # tolerance for identities that hold in closed form
TAIL_TOL = 1e-6            # surrogate for lim_{t->inf} N = 1
MAX_COUNTEREXAMPLES = 12


# ---------------------------------------------------------------------------
# points and crisp norms
# ---------------------------------------------------------------------------

def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-d float vector (a scalar becomes dimension 1)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InputDomainError(f"expected a single point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputDomainError("point has non-finite coordinates")
    if dim is not None and arr.shape[0] != dim:
        raise InputDomainError(f"expected dimension {dim}, got {arr.shape[0]}")
    return arr


def crisp_norm(x: np.ndarray, kind: str = "euclidean") -> np.ndarray:
    """Row-wise crisp norm; accepts a single point or an (n, d) batch."""
    arr = np.asarray(x, dtype=float)
    axis = arr.ndim - 1
    if kind == "euclidean":
        return np.sqrt(np.sum(arr * arr, axis=axis))
    if kind == "l1":
        return np.sum(np.abs(arr), axis=axis)
    if kind == "max":
        return np.max(np.abs(arr), axis=axis)
    raise InputDomainError(f"unknown base norm kind '{kind}'")


# ---------------------------------------------------------------------------
# fuzzy norm specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrispInduced:
    """N(x, t) = t / (t + p ||x||) for t > 0, else 0.  Requires p > 0."""

    p: float = 1.0
    base_norm: str = "euclidean"

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 0):
            raise InputDomainError("CrispInduced requires p > 0")


@dataclass(frozen=True)
class QuadraticRatio:
    """N(x, t) = (t^2 - ||x||^2) / (t^2 + ||x||^2) for t > ||x||, else 0."""

    base_norm: str = "euclidean"


@dataclass(frozen=True)
class Indicator:
    """N(x, t) = 1 if t > ||x|| else 0.

    A stress input, not a certified fuzzy norm: it jumps at t = ||x||, so
    the axiom checker is expected to fail it on N6 and say where.
    """

    base_norm: str = "euclidean"


@dataclass(frozen=True)
class CustomNorm:
    """User-supplied membership map (x, t) -> [0, 1], checked point by point."""

    evaluator: Callable[[np.ndarray, float], float]
    name: str = "custom"
    base_norm: str = "euclidean"


NormSpec = Union[CrispInduced, QuadraticRatio, Indicator, CustomNorm]


def _radius_membership(spec: NormSpec, r, t) -> np.ndarray:
    """Membership from crisp radius; valid for every shipped (isotropic) kind.

    Evaluated through the ratio r/t so subnormal t cannot underflow the
    squared terms into 0/0 (t/(t+pr) and (t^2-r^2)/(t^2+r^2) both rewrite
    exactly in terms of q = r/t on the active branch t > 0 resp. t > r).
    """
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float),
                               np.asarray(t, dtype=float))
    if isinstance(spec, Indicator):
        return np.where(t > r, 1.0, 0.0)
    out = np.zeros(t.shape)
    # q may saturate to inf for subnormal t; the membership then rounds to
    # its correct limit 0, so the overflow is benign
    with np.errstate(over="ignore"):
        if isinstance(spec, CrispInduced):
            active = t > 0.0
            q = np.divide(r, t, out=np.zeros(t.shape), where=active)
            np.divide(1.0, 1.0 + spec.p * q, out=out, where=active)
            return out
        if isinstance(spec, QuadraticRatio):
            active = t > r
            q = np.divide(r, t, out=np.zeros(t.shape), where=active)
            q2 = q * q
            np.divide(1.0 - q2, 1.0 + q2, out=out, where=active)
            return out
    raise InputDomainError(f"norm kind {type(spec).__name__} has no closed form")


def _eval_custom(spec: CustomNorm, x: np.ndarray, t: float) -> float:
    value = float(spec.evaluator(np.asarray(x, dtype=float), float(t)))
    if not math.isfinite(value) or value < -1e-9 or value > 1 + 1e-9:
        raise InputDomainError(
            f"custom norm '{spec.name}' returned {value!r}, outside [0, 1]")
    return min(1.0, max(0.0, value))


def eval_norm(spec: NormSpec, x, t: float) -> float:
    """Membership value N(x, t); exactly 0 for t <= 0."""
    pt = as_point(x)
    if not math.isfinite(t):
        raise InputDomainError("t must be finite")
    if isinstance(spec, CustomNorm):
        return _eval_custom(spec, pt, t)
    r = crisp_norm(pt, spec.base_norm)
    return float(_radius_membership(spec, r, t))


def _memberships_rows(spec: NormSpec, rows: np.ndarray, t) -> np.ndarray:
    """N(row_i, t_i) for an (n, m) batch; t is a scalar or an (n,) array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (rows.shape[0],))
    if isinstance(spec, CustomNorm):
        return np.array([_eval_custom(spec, row, ti) for row, ti in zip(rows, t)])
    return _radius_membership(spec, crisp_norm(rows, spec.base_norm), t)


def _membership_grid(spec: NormSpec, pts: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """(P, T) matrix of N(x_i, t_j)."""
    if isinstance(spec, CustomNorm):
        return np.array([[_eval_custom(spec, x, t) for t in ts] for x in pts])
    r = crisp_norm(pts, spec.base_norm)
    return _radius_membership(spec, r[:, None], ts[None, :])


def membership_threshold(spec: NormSpec, eps: float, dim: int = 1) -> float:
    """Smallest t with N(e1, t) >= 1 - eps (e1 the first unit vector).

    By N3 this rescales: N(v, t) >= 1 - eps once t >= threshold * ||v||.
    """
    if not 0 < eps < 1:
        raise InputDomainError("eps must lie in (0, 1)")
    if isinstance(spec, CrispInduced):
        return spec.p * (1 - eps) / eps
    if isinstance(spec, QuadraticRatio):
        return math.sqrt(2.0 / eps - 1.0)
    if isinstance(spec, Indicator):
        return 1.0
    e1 = np.zeros(dim)
    e1[0] = 1.0
    lo, hi = 0.0, 1.0
    while _eval_custom(spec, e1, hi) < 1 - eps:
        hi *= 2.0
        if hi > 1e18:
            raise InputDomainError("custom norm never reaches 1 - eps")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _eval_custom(spec, e1, mid) >= 1 - eps:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# sample plans
# ---------------------------------------------------------------------------

@dataclass
class SamplePlan:
    """Deterministic sampling layout for the axiom checker.

    ``points`` must contain the zero vector, ``t_grid`` must be strictly
    increasing and span t <= 0 as well as t > 0, ``scalars`` are the nonzero
    factors for N3, and ``pair_count`` quadruples (x, y, s, t) are drawn
    from ``seed`` for N4.
    """

    points: np.ndarray
    t_grid: np.ndarray
    scalars: np.ndarray
    pair_count: int
    seed: int

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.scalars = np.asarray(self.scalars, dtype=float)
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.t_grid))):
            raise InputDomainError("plan contains non-finite values")
        if np.any(np.diff(self.t_grid) <= 0):
            raise InputDomainError("t_grid must be strictly increasing")
        if not (np.any(self.t_grid <= 0) and np.any(self.t_grid > 0)):
            raise InputDomainError("t_grid must contain some t <= 0 and some t > 0")
        if not np.any(np.all(self.points == 0.0, axis=1)):
            raise InputDomainError("points must include the zero vector")
        if np.any(self.scalars == 0.0):
            raise InputDomainError("scalars must be nonzero")
        if self.pair_count < 1:
            raise InputDomainError("pair_count must be >= 1")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "t_grid": self.t_grid,
            "scalars": self.scalars,
            "pair_count": self.pair_count,
            "seed": self.seed,
        }

    def digest(self) -> str:
        return sha256_digest(self.to_dict())


def standard_plan(dim: int = 1, seed: int = 0) -> SamplePlan:
    """Fixed reference plan; point norms sit strictly inside the t grid."""
    rows = [np.zeros(dim)]
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        rows.append(e)
    half = np.zeros(dim)
    half[0] = 0.5
    rows.append(half)
    rows.append(np.full(dim, 1.3 / math.sqrt(dim)))
    tilt = np.zeros(dim)
    tilt[-1] = -1.7
    rows.append(tilt)
    t_grid = [-3.0, -1.0, -0.25, 0.0, 0.05, 0.12, 0.3, 0.55, 0.8,
              1.05, 1.4, 2.1, 3.2, 6.5, 12.0, 40.0, 150.0]
    return SamplePlan(np.array(rows), np.array(t_grid),
                      np.array([-2.0, -0.5, 1.5, 3.0]), 32, seed)


def random_plan(dim: int = 1, seed: int = 0) -> SamplePlan:
    """Seeded random plan satisfying every SamplePlan invariant."""
    rng = np.random.default_rng(seed)
    extra = rng.uniform(0.25, 1.8, size=(3, dim)) * rng.choice([-1.0, 1.0], size=(3, dim))
    points = np.vstack([np.zeros((1, dim)), np.eye(dim), extra])
    negs = -np.sort(rng.uniform(0.5, 3.0, size=2))[::-1]
    pos = np.geomspace(rng.uniform(0.02, 0.06), rng.uniform(20.0, 60.0), 12)
    t_grid = np.concatenate([negs, [0.0], pos])
    pool = np.array([-3.0, -2.0, -1.5, -0.5, 0.5, 1.5, 2.0, 3.0])
    scalars = rng.choice(pool, size=4, replace=False)
    return SamplePlan(points, t_grid, scalars, 24, seed)


# ---------------------------------------------------------------------------
# axiom checker
# ---------------------------------------------------------------------------

@dataclass
class AxiomReport:
    axioms: dict
    counterexamples: list
    seed: int
    plan_digest: str

    @property
    def passed(self) -> bool:
        return all(self.axioms.values())

    def to_dict(self) -> dict:
        return {
            "axioms": dict(self.axioms),
            "counterexamples": list(self.counterexamples),
            "seed": self.seed,
            "plan_digest": self.plan_digest,
        }


def _t_scale(spec: NormSpec, r: np.ndarray) -> np.ndarray:
    # the t at which N(x, .) transitions; the tail probe must outrun it
    if isinstance(spec, CrispInduced):
        return spec.p * r
    return r


def _t_modulus(spec: NormSpec, r: float) -> float | None:
    """sup_t |dN/dt| where the closed form is differentiable (x != 0).

    Indicator's closed form has zero slope away from its jump, so the bound
    is 0 and any jump is flagged.  None means: estimate numerically.
    """
    if isinstance(spec, CrispInduced):
        return 1.0 / (spec.p * r)
    if isinstance(spec, QuadraticRatio):
        return 1.0 / r
    if isinstance(spec, Indicator):
        return 0.0
    return None


def _numeric_modulus(spec: CustomNorm, x: np.ndarray, ts: np.ndarray) -> float:
    # midpoint divided differences; a weak surrogate, documented as such
    worst = 0.0
    for lo, hi in zip(ts[:-1], ts[1:]):
        mid = 0.5 * (lo + hi)
        n_lo = _eval_custom(spec, x, lo)
        n_mid = _eval_custom(spec, x, mid)
        n_hi = _eval_custom(spec, x, hi)
        worst = max(worst,
                    abs(n_mid - n_lo) / (mid - lo),
                    abs(n_hi - n_mid) / (hi - mid))
    return worst * 1.25


def check_axioms(spec: NormSpec, plan: SamplePlan) -> AxiomReport:
    """Run the six-axiom suite over the plan; failures become report entries.

    Surrogates: N5's limit is probed at T = 1e6 * (1 + s(x)) where s(x) is
    the norm's own transition scale (so the probe outruns it for every
    parameter choice); N6 is a sampled modulus check |dN| <= K dt with K
    from the analytic derivative for shipped norms and from divided
    differences for custom ones.
    """
    pts, ts = plan.points, plan.t_grid
    grid = _membership_grid(spec, pts, ts)
    norms = crisp_norm(pts, spec.base_norm)
    zero_rows = norms == 0.0
    counterexamples: list[dict] = []
    axioms = {}

    def record(axiom: str, **fields):
        if len(counterexamples) < MAX_COUNTEREXAMPLES:
            entry = {"axiom": axiom}
            entry.update(fields)
            counterexamples.append(entry)

    # N1: zero membership on t <= 0
    neg = ts <= 0.0
    bad = np.argwhere(np.abs(grid[:, neg]) > EXACT_TOL)
    axioms["N1"] = bad.size == 0
    for i, j in bad[:3]:
        tj = ts[neg][j]
        record("N1", x=pts[i].tolist(), t=float(tj), value=float(grid[i, neg][j]))

    # N2 forward: the zero vector scores 1 at every t > 0
    pos = ts > 0.0
    ok_fwd = bool(np.all(grid[zero_rows][:, pos] >= 1.0 - EXACT_TOL))
    if not ok_fwd:
        i = int(np.nonzero(zero_rows)[0][0])
        j = int(np.argmin(grid[i, pos]))
        record("N2", x=pts[i].tolist(), t=float(ts[pos][j]),
               value=float(grid[i, pos][j]), detail="zero vector not at membership 1")
    # N2 converse: every nonzero point drops below 1 at some sampled t > 0
    ok_conv = True
    for i in np.nonzero(~zero_rows)[0]:
        if not np.any(grid[i, pos] < 1.0 - 1e-9):
            ok_conv = False
            record("N2", x=pts[i].tolist(),
                   detail="membership stays 1 at every sampled t > 0")
    axioms["N2"] = ok_fwd and ok_conv

    # N3: scaling identity, exact in closed form
    ok_n3 = True
    for c in plan.scalars:
        lhs = _membership_grid(spec, pts * c, ts)
        rhs = _membership_grid(spec, pts, ts / abs(c))
        err = np.abs(lhs - rhs)
        worst = np.unravel_index(np.argmax(err), err.shape)
        if err[worst] > EXACT_TOL:
            ok_n3 = False
            record("N3", x=pts[worst[0]].tolist(), t=float(ts[worst[1]]),
                   scalar=float(c), error=float(err[worst]))
    axioms["N3"] = ok_n3

    # N4: triangle-style inequality on seeded quadruples (s, t of either sign,
    # as the axiom is stated; it is vacuous when both memberships are 0)
    rng = np.random.default_rng([plan.seed, 4])
    k = plan.pair_count
    i_idx = rng.integers(0, len(pts), k)
    j_idx = rng.integers(0, len(pts), k)
    t4 = ts[rng.integers(0, len(ts), k)]
    s4 = ts[rng.integers(0, len(ts), k)]
    lhs4 = _memberships_rows(spec, pts[i_idx] + pts[j_idx], t4 + s4)
    rhs4 = np.minimum(_memberships_rows(spec, pts[i_idx], t4),
                      _memberships_rows(spec, pts[j_idx], s4))
    bad4 = np.nonzero(lhs4 < rhs4 - EXACT_TOL)[0]
    axioms["N4"] = bad4.size == 0
    for b in bad4[:3]:
        record("N4", x=pts[i_idx[b]].tolist(), y=pts[j_idx[b]].tolist(),
               t=float(t4[b]), s=float(s4[b]),
               lhs=float(lhs4[b]), rhs=float(rhs4[b]))

    # N5: nondecreasing along the grid plus the far-tail surrogate
    drops = np.argwhere(np.diff(grid, axis=1) < -EXACT_TOL)
    ok_mono = drops.size == 0
    for i, j in drops[:3]:
        record("N5", x=pts[i].tolist(), t=float(ts[j + 1]),
               detail="membership decreased along t")
    t_big = 1e6 * (1.0 + _t_scale(spec, norms))
    tail = _memberships_rows(spec, pts, t_big)
    ok_tail = bool(np.all(tail >= 1.0 - TAIL_TOL))
    if not ok_tail:
        i = int(np.argmin(tail))
        record("N5", x=pts[i].tolist(), t=float(t_big[i]), value=float(tail[i]),
               detail="far tail below 1 - 1e-6")
    axioms["N5"] = ok_mono and ok_tail

    # N6: sampled continuity for x != 0
    ok_n6 = True
    dt = np.diff(ts)
    for i in np.nonzero(~zero_rows)[0]:
        if isinstance(spec, CustomNorm):
            k_bound = _numeric_modulus(spec, pts[i], ts)
        else:
            k_bound = _t_modulus(spec, float(norms[i]))
        jumps = np.abs(np.diff(grid[i]))
        allowed = k_bound * dt * (1 + 1e-9) + EXACT_TOL
        bad6 = np.nonzero(jumps > allowed)[0]
        if bad6.size:
            ok_n6 = False
            j = int(bad6[0])
            record("N6", x=pts[i].tolist(), t_lo=float(ts[j]), t_hi=float(ts[j + 1]),
                   jump=float(jumps[j]), bound=float(allowed[j]),
                   detail=f"discontinuity detected across [{ts[j]:g}, {ts[j+1]:g}] "
                          f"containing t = ||x|| = {norms[i]:.6g}")
    axioms["N6"] = ok_n6

    order = {k: axioms[k] for k in ("N1", "N2", "N3", "N4", "N5", "N6")}
    return AxiomReport(order, counterexamples, plan.seed, plan.digest())


# ---------------------------------------------------------------------------
# fuzzy convergence / Cauchy testers
# ---------------------------------------------------------------------------

def _seq_at(seq, n: int) -> np.ndarray:
    item = seq(n) if callable(seq) else seq[n]
    return as_point(item)


def fuzzy_limit_test(seq, limit, spec: NormSpec, t_probe: Sequence[float],
                     eps: float, n_max: int):
    """Does x_n reach membership > 1 - eps around ``limit`` for every probe t?

    Returns (ok, n0): n0 is the first index from which every later term (up
    to n_max) stays above the membership bar for all probes; None on failure.
    """
    t_probe = np.asarray(list(t_probe), dtype=float)
    if t_probe.size == 0:
        raise InputDomainError("t_probe must be nonempty")
    if np.any(t_probe <= 0):
        raise InputDomainError("t_probe values must be positive")
    if not 0 < eps < 1:
        raise InputDomainError("eps must lie in (0, 1)")
    if n_max < 1:
        raise InputDomainError("n_max must be >= 1")
    lim = as_point(limit)
    diffs = np.stack([_seq_at(seq, n) - lim for n in range(n_max + 1)])
    n0_overall = 0
    for t in t_probe:
        memb = _memberships_rows(spec, diffs, t)
        ok = memb > 1.0 - eps
        if not ok[-1]:
            return False, None
        failing = np.nonzero(~ok)[0]
        n0 = int(failing[-1]) + 1 if failing.size else 0
        n0_overall = max(n0_overall, n0)
    return True, n0_overall


def fuzzy_cauchy_test(seq, spec: NormSpec, delta: float, eps: float, n_max: int):
    """Is there n0 < n_max with N(x_m - x_n, delta) > 1 - eps for all
    n0 <= m, n <= n_max?

    The witness must cover at least one pair of distinct indices: n0 = n_max
    alone only compares x_n with itself (membership 1 for any delta > 0) and
    would accept every sequence.  Returns (ok, n0) with the smallest witness
    index, or (False, None).
    """
    if delta <= 0:
        raise InputDomainError("delta must be positive")
    if not 0 < eps < 1:
        raise InputDomainError("eps must lie in (0, 1)")
    if n_max < 1:
        raise InputDomainError("n_max must be >= 1")
    pts = np.stack([_seq_at(seq, n) for n in range(n_max + 1)])
    diffs = pts[:, None, :] - pts[None, :, :]
    flat = diffs.reshape(-1, pts.shape[1])
    memb = _memberships_rows(spec, flat, delta).reshape(len(pts), len(pts))
    ok = memb > 1.0 - eps
    good_from = None
    all_good = bool(ok[n_max, n_max])
    for i in range(n_max - 1, -1, -1):
        all_good = all_good and bool(ok[i, i:].all()) and bool(ok[i:, i].all())
        if all_good:
            good_from = i
        else:
            break
    if good_from is None:
        return False, None
    return True, good_from
