"""Acceptance gate: one test per shipped criterion, at stated tolerances.

Run with  pytest tests/test_acceptance.py -v -s  to see one line per
criterion.  Timings are wall-clock budgets on desk hardware.
"""

import json
import math
import os
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from hyerslab.functional_eq import (TestFunction, eval_D, standard_triples,
                                    substitution_suite)
from hyerslab.fuzzy_norm import (CrispInduced, CustomNorm, QuadraticRatio,
                                 check_axioms, fuzzy_cauchy_test,
                                 fuzzy_limit_test, random_plan, standard_plan)
from hyerslab.hyers import (Constant, PowerSum, StoppingRule, corollary53_suite,
                            extract_affine, geometric_t_grid, phi_tilde,
                            phi_tilde_partial, stage_error_bound,
                            uniqueness_probe, verify_bound_nonuniform,
                            verify_hypothesis_nonuniform, verify_uniform_limit)
from hyerslab.perturb import (ConstantOffset, PowerGrowth, SineBounded,
                              make_affine, make_perturbed_affine, make_violator)

ROOT = Path(__file__).resolve().parents[1]
NORM = CrispInduced(1.0)

T_SCHED = [1.0, 10.0, 100.0, 1000.0, 10000.0]
EPS_SCHED = [0.2, 0.1, 0.05, 0.02, 0.01]


def _report(line: str) -> None:
    print(line, flush=True)


# ---------------------------------------------------------------------------

def test_criterion_01_axiom_suite():
    specs = [CrispInduced(0.5), CrispInduced(1.0), CrispInduced(2.0),
             QuadraticRatio()]
    t0 = time.perf_counter()
    for spec in specs:
        for k in range(1000):
            plan = random_plan(dim=1 + k % 3, seed=k)
            rep = check_axioms(spec, plan)
            assert rep.passed, (spec, k, rep.counterexamples)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"axiom sweep took {elapsed:.2f}s"

    def broken(x, t):
        if t == 0.0:
            return 0.5
        return 0.0 if t < 0 else t / (t + np.linalg.norm(x))

    rep = check_axioms(CustomNorm(broken, name="broken-at-zero"),
                       standard_plan(1, seed=0))
    assert rep.axioms["N1"] is False
    ce = [c for c in rep.counterexamples if c["axiom"] == "N1"]
    assert ce and ce[0]["t"] == 0.0
    _report(f"criterion 1: PASS — 4 norms x 1000 plans in {elapsed:.2f}s; "
            "broken-at-zero variant fails N1 with counterexample")


def test_criterion_02_solution_characterization():
    rng = np.random.default_rng(31)
    worst = 0.0
    for i in range(100):
        dim = 1 + i % 3
        a = rng.uniform(-2, 2, size=(dim, dim))
        b = rng.uniform(-2, 2, size=dim)
        f = make_affine(a, b)
        tri = standard_triples(dim, 60, 2.0, seed=i)
        from hyerslab.functional_eq import eval_D_many
        defects = eval_D_many(f, tri.x, tri.y, tri.z)
        worst = max(worst, float(np.abs(defects).max()))
    assert worst <= 1e-12

    quad = make_violator("quadratic")
    assert eval_D(quad, 1.0, 0.0, 0.0)[0] == pytest.approx(6.0, abs=1e-12)

    probes = np.linspace(-2.5, 2.5, 9)[:, None]
    for a_val, b_val in [(2.0, 1.0), (-0.7, 0.3), (1.5, 0.0)]:
        report = substitution_suite(make_affine([[a_val]], [b_val]), probes)
        names = {c.name for c in report.checks}
        assert names == {"triple_scaling", "oddness", "symmetric_mean"}
        assert report.passed
        assert max(c.max_residual for c in report.checks) <= 1e-12
    _report(f"criterion 2: PASS — 100 affine maps, worst defect {worst:.2e}; "
            "quadratic witness 6; all three derived identities reproduced")


def test_criterion_03_nonuniform_bound_reproduction():
    t0 = time.perf_counter()
    made = make_perturbed_affine([[2.0]], [1.0], SineBounded(0.1, 1.0, seed=0))
    tri = standard_triples(1, 10_000, 2.0, seed=2026)
    grid = geometric_t_grid()   # 240-point geometric grid
    assert grid.shape == (240,)
    hyp = verify_hypothesis_nonuniform(made.fn, made.control, NORM, NORM,
                                       tri, grid)
    assert hyp.passed and len(tri) == 10_000

    probes = np.concatenate([np.geomspace(1e-3, 3.0, 12),
                             [-0.7, -2.5, math.pi / 2]])[:, None]
    ext = extract_affine(made.fn, probes)
    assert ext.converged and ext.depth_used <= 25

    bound = verify_bound_nonuniform(made.fn, ext, made.control, NORM, NORM,
                                    alpha=1.0, t_grid=grid)
    sup_residual = float(bound.residuals.max())
    assert sup_residual == pytest.approx(0.1, abs=1e-6)
    assert sup_residual <= 1.2 / (3.0 - 1.0)
    assert bound.passed and float(bound.per_t_min_margin.min()) >= 0.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    _report(f"criterion 3: PASS — hypothesis on 1e4 triples, depth "
            f"{ext.depth_used}, sup residual {sup_residual:.9f} <= 0.6, "
            f"fuzzy bound holds on all 240 grid points, {elapsed:.2f}s")


def test_criterion_04_stage_bound():
    alphas = [0.5, 1.0, math.sqrt(3.0), 2.9]
    for alpha in alphas:
        for n in range(41):
            closed = (1.0 - (alpha / 3.0) ** n) / (3.0 - alpha)
            assert stage_error_bound(alpha, n) == pytest.approx(closed, abs=1e-12)
        assert stage_error_bound(alpha, None) == pytest.approx(
            1.0 / (3.0 - alpha), abs=1e-15)
    _report("criterion 4: PASS — stage bound matches (1-(a/3)^n)/(3-a) to "
            "1e-12 for all four alphas, n <= 40, with the right limit")


def test_criterion_05_summed_series():
    sv = phi_tilde(Constant(1.2), 0.0, 0.0, 1.0, tail_tol=1e-8)
    assert sv.value == pytest.approx(1.8, abs=1e-8)

    sv2 = phi_tilde(PowerSum(1.0, 0.5), 0.0, 0.0, 1.0, tail_tol=1e-6)
    expected = math.sqrt(3.0) / (math.sqrt(3.0) - 1.0)
    assert expected == pytest.approx(2.3660, abs=1e-4)
    assert sv2.value == pytest.approx(expected, abs=1e-4)

    for phi in (Constant(1.2), PowerSum(1.0, 0.5)):
        for depth in (4, 9, 14):
            shallow, remainder = phi_tilde_partial(phi, 0.0, 0.0, 1.0, depth)
            deep, _ = phi_tilde_partial(phi, 0.0, 0.0, 1.0, depth + 10)
            assert 0.0 <= deep - shallow <= remainder + 1e-15
    _report(f"criterion 5: PASS — constant series 1.8, power series "
            f"{sv2.value:.4f} ~ 2.3660, truncation certificates verified")


def test_criterion_06_uniform_suite():
    made = make_perturbed_affine([[2.0]], [1.0], PowerGrowth(0.1, 0.5, 1.0, seed=0))
    probes = np.geomspace(1e-3, 1.0, 12)[:, None]
    rep = corollary53_suite(made.control.eps, 0.5, made.fn, probes,
                            T_SCHED, EPS_SCHED)
    assert rep.passed
    assert 0.0 < rep.ratio_sup < 1.0

    mismatch = make_perturbed_affine([[2.0]], [1.0], ConstantOffset(0.1, 1.0, seed=0))
    small = np.geomspace(1e-16, 1.0, 20)[:, None]
    ext = extract_affine(mismatch.fn, small)
    ul = verify_uniform_limit(mismatch.fn, ext, PowerSum(1.0, 0.5), NORM,
                              T_SCHED, EPS_SCHED)
    assert not ul.passed and ul.findings
    nearest = min(abs(f["probe"][0]) for f in ul.findings)
    assert nearest <= 1e-6
    _report(f"criterion 6: PASS — power-growth suite ratio_sup="
            f"{rep.ratio_sup:.4f}; offset-vs-power mismatch flagged at "
            f"probe {nearest:.1e} near x=0")


def test_criterion_07_uniqueness():
    probes = np.array([[0.25], [1.0], [-1.0], [2.0]])
    f1 = make_perturbed_affine([[2.0]], [1.0], SineBounded(0.1, 1.0, seed=0)).fn
    f2 = TestFunction(lambda X: 2 * X + 1 - 0.05 * np.cos(2 * X) + 0.05,
                      1, 1, name="second-certified")
    same = uniqueness_probe(f1, f2, probes)
    assert same.max_discrepancy <= 1e-9

    g2 = make_perturbed_affine([[2.1]], [1.0], SineBounded(0.1, 1.0, seed=0)).fn
    units = np.array([[1.0], [-1.0]])
    split = uniqueness_probe(f1, g2, units)
    assert split.discrepancies.min() >= 0.09
    _report(f"criterion 7: PASS — same-core discrepancy "
            f"{same.max_discrepancy:.2e} <= 1e-9; different cores separated "
            f"by {split.discrepancies.min():.3f} >= 0.09 at unit probes")


def test_criterion_08_fuzzy_sequence_checks():
    grid = geometric_t_grid()   # 6 decades
    cases = [
        (SineBounded(0.1, 1.0, seed=0), 1.0, None),
        (SineBounded(0.07, 2.0, seed=11), 1.0, None),
        (ConstantOffset(0.1, 1.0, seed=0), 1.0, None),
        (PowerGrowth(0.1, 0.5, 1.0, seed=0), 3 ** 0.5, StoppingRule(25, 1e-6)),
    ]
    for spec, alpha, rule in cases:
        made = make_perturbed_affine([[2.0]], [1.0], spec)
        x = np.array([1.0])
        f0 = made.fn(np.zeros(1))

        def seq(n, fn=made.fn, f0=f0):
            return (fn(3.0 ** n * x) - f0) / 3.0 ** n

        for delta in grid[::40]:        # one delta per decade
            ok, _ = fuzzy_cauchy_test(seq, NORM, float(delta), 0.01, 24)
            assert ok, (spec, delta)
        ext = extract_affine(made.fn, x[None, :], rule, alpha=alpha)
        assert ext.converged
        ok_lim, _ = fuzzy_limit_test(seq, ext.values[0], NORM, grid, 0.01, 24)
        assert ok_lim, spec
    _report("criterion 8: PASS — every certified iteration sequence is "
            "fuzzy-Cauchy and fuzzy-converges to its extracted map at "
            "eps=0.01 over the 6-decade grid")


def test_criterion_09_cli_reproducibility(tmp_path):
    config = ROOT / "configs" / "nonuniform_sine.json"
    env = dict(os.environ)
    env.pop("HYERSLAB_SEED", None)

    def run_cli(out, threads):
        e = dict(env, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads)
        proc = subprocess.run(
            [sys.executable, "-m", "hyerslab", "run", "--config", str(config),
             "--out", str(out)],
            cwd=ROOT, env=e, capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0, proc.stderr
        raw = out.read_bytes()
        return re.sub(rb'"wall_clock_s": [^,\n]+', b'"wall_clock_s": X', raw)

    first = run_cli(tmp_path / "a.json", "1")
    second = run_cli(tmp_path / "b.json", "1")
    threaded = run_cli(tmp_path / "c.json", "4")
    assert first == second
    assert first == threaded
    _report("criterion 9: PASS — CLI byte-identical across two invocations "
            "and across thread counts (modulo wall clock)")
