"""Batch experiment runner.

Reads a JSON experiment config, executes the requested suite, writes a
machine-readable JSON report plus optional plot-ready CSV data.  Exit
status: 0 when every check passed, 1 when some check failed, 2 on input
errors (malformed config, missing plot series).  The env var
``HYERSLAB_SEED`` overrides the config seed.  Identical effective configs
produce byte-identical reports except for the wall_clock_s field.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ConfigError, DivergentSeriesError, InputDomainError,
                     NonConvergedError)
from .functional_eq import check_solution, standard_triples, substitution_suite
from .fuzzy_norm import (CrispInduced, Indicator, QuadraticRatio, check_axioms,
                         random_plan, standard_plan)
from .hyers import (Constant, PowerSum, StoppingRule, corollary53_suite,
                    extract_affine, geometric_t_grid, uniqueness_probe,
                    verify_bound_nonuniform, verify_bound_uniform,
                    verify_hypothesis_nonuniform, verify_uniform_limit)
from .perturb import (make_affine, make_perturbed_affine, make_violator,
                      perturbation_from_dict, perturbation_to_dict)
from .reporting import format_float, sha256_digest, to_jsonable, write_json

EXPERIMENTS = ("axioms", "solution-check", "extract", "verify-nonuniform",
               "verify-uniform", "corollary53", "uniqueness", "full")
PLOT_KINDS = ("residual-vs-x", "membership-vs-t", "bound-tightness")

_KNOWN_KEYS = {"experiment", "dimension", "seed", "norm", "norm_prime",
               "affine", "perturbation", "violator", "control", "probes",
               "t_grid", "triples", "stopping", "uniform", "tolerances",
               "axioms", "perturbation_b", "affine_b"}


# ---------------------------------------------------------------------------
# config parsing and normalization
# ---------------------------------------------------------------------------

def _expect(cond: bool, field: str, message: str):
    if not cond:
        raise ConfigError(field, message)


def _section(raw: dict, key: str, defaults: dict) -> dict:
    value = raw.get(key, {})
    _expect(isinstance(value, dict), key, "must be an object")
    out = dict(defaults)
    for k, v in value.items():
        _expect(k in defaults, f"{key}.{k}", "unknown field")
        out[k] = v
    return out


def _norm_cfg(value, field: str) -> dict:
    _expect(isinstance(value, dict), field, "must be an object")
    kind = value.get("kind")
    _expect(kind in ("crisp-induced", "quadratic-ratio", "indicator"),
            f"{field}.kind", "must be crisp-induced, quadratic-ratio or indicator")
    out = {"kind": kind, "base_norm": value.get("base_norm", "euclidean")}
    _expect(out["base_norm"] in ("euclidean", "l1", "max"),
            f"{field}.base_norm", "must be euclidean, l1 or max")
    if kind == "crisp-induced":
        p = value.get("p", 1.0)
        _expect(isinstance(p, (int, float)) and p > 0, f"{field}.p", "must be > 0")
        out["p"] = float(p)
    for k in value:
        _expect(k in out, f"{field}.{k}", "unknown field")
    return out


def parse_config(raw: dict) -> dict:
    """Validate and normalize a config dict; raises ConfigError naming the
    offending field.  The normalized form is what reports echo and digest."""
    _expect(isinstance(raw, dict), "<root>", "config must be a JSON object")
    for k in raw:
        _expect(k in _KNOWN_KEYS, k, "unknown field")

    experiment = raw.get("experiment")
    _expect(experiment in EXPERIMENTS, "experiment",
            f"must be one of {', '.join(EXPERIMENTS)}")
    _expect("seed" in raw, "seed", "missing (reports must be reproducible)")
    _expect(isinstance(raw["seed"], int), "seed", "must be an integer")
    seed = raw["seed"]

    dimension = raw.get("dimension", 1)
    _expect(isinstance(dimension, int) and 1 <= dimension <= 3,
            "dimension", "must be an integer in {1, 2, 3}")

    norm = _norm_cfg(raw.get("norm", {"kind": "crisp-induced", "p": 1.0}), "norm")
    norm_prime = _norm_cfg(raw["norm_prime"], "norm_prime") \
        if "norm_prime" in raw else dict(norm)

    affine = raw.get("affine")
    if affine is None:
        affine = {"a": (2.0 * np.eye(dimension)).tolist(),
                  "b": [1.0] * dimension}
    _expect(isinstance(affine, dict) and "a" in affine and "b" in affine,
            "affine", "must be an object with fields a and b")
    try:
        a = np.atleast_2d(np.asarray(affine["a"], dtype=float))
        b = np.atleast_1d(np.asarray(affine["b"], dtype=float))
    except (TypeError, ValueError):
        raise ConfigError("affine", "a and b must be numeric arrays") from None
    _expect(a.shape[1] == dimension, "affine.a",
            f"must have {dimension} columns to match the dimension")
    _expect(a.shape[0] == b.shape[0], "affine.b",
            "length must match the rows of a")
    affine = {"a": a.tolist(), "b": b.tolist()}

    perturbation = raw.get("perturbation")
    if perturbation is not None:
        try:
            perturbation = perturbation_to_dict(perturbation_from_dict(perturbation))
        except (KeyError, TypeError, InputDomainError) as exc:
            raise ConfigError("perturbation", str(exc)) from None

    violator = raw.get("violator")
    if violator is not None:
        _expect(violator in ("quadratic", "cubic", "absolute-value"),
                "violator", "must be quadratic, cubic or absolute-value")

    control = raw.get("control")
    if control is not None:
        _expect(isinstance(control, dict) and control.get("kind") in
                ("constant", "power-sum"), "control.kind",
                "must be constant or power-sum")
        if control["kind"] == "constant":
            c = control.get("c")
            _expect(isinstance(c, (int, float)) and c >= 0, "control.c",
                    "must be a number >= 0")
            control = {"kind": "constant", "c": float(c)}
        else:
            eps, p = control.get("eps"), control.get("p")
            _expect(isinstance(eps, (int, float)) and eps >= 0, "control.eps",
                    "must be a number >= 0")
            _expect(isinstance(p, (int, float)) and 0 <= p < 1, "control.p",
                    "must satisfy 0 <= p < 1")
            control = {"kind": "power-sum", "eps": float(eps), "p": float(p)}

    probes = _section(raw, "probes", {
        "count": 24, "radius": 3.0, "min_radius": 1e-3,
        "spacing": "geometric", "points": None, "extra_points": []})
    _expect(probes["spacing"] in ("geometric", "linear"), "probes.spacing",
            "must be geometric or linear")
    _expect(isinstance(probes["count"], int) and probes["count"] >= 1,
            "probes.count", "must be a positive integer")

    t_grid = _section(raw, "t_grid", {"t_min": 1e-3, "decades": 6,
                                      "per_decade": 40})
    triples = _section(raw, "triples", {"count": 2000, "radius": 2.0})
    axioms = _section(raw, "axioms", {"plans": 8})

    stopping = raw.get("stopping")
    if stopping is not None:
        stopping = _section(raw, "stopping", {
            "n_max": 30, "successive_tol": 1e-10, "argument_cap": 1e12})

    uniform = _section(raw, "uniform", {
        "delta": 9.0, "alpha_level": 0.85,
        "t_schedule": [1.0, 10.0, 100.0, 1000.0, 10000.0],
        "eps_schedule": [0.2, 0.1, 0.05, 0.02, 0.01],
        "ratio_cap": 1e6})
    _expect(len(uniform["t_schedule"]) == len(uniform["eps_schedule"]),
            "uniform.eps_schedule", "must pair one eps with every t")

    tolerances = _section(raw, "tolerances", {
        "solution_tol": 1e-9, "margin_tol": 1e-9, "uniqueness_tol": 1e-8})

    perturbation_b = raw.get("perturbation_b")
    if perturbation_b is not None:
        try:
            perturbation_b = perturbation_to_dict(perturbation_from_dict(perturbation_b))
        except (KeyError, TypeError, InputDomainError) as exc:
            raise ConfigError("perturbation_b", str(exc)) from None
    elif perturbation is not None:
        # default uniqueness partner: same family and budget, fresh seed
        perturbation_b = dict(perturbation)
        perturbation_b["seed"] = perturbation["seed"] + 1

    affine_b = raw.get("affine_b")
    if affine_b is not None:
        try:
            a2 = np.atleast_2d(np.asarray(affine_b["a"], dtype=float))
            b2 = np.atleast_1d(np.asarray(affine_b["b"], dtype=float))
        except (KeyError, TypeError, ValueError):
            raise ConfigError("affine_b", "must carry numeric fields a and b") from None
        affine_b = {"a": a2.tolist(), "b": b2.tolist()}

    return to_jsonable({
        "experiment": experiment, "dimension": dimension, "seed": seed,
        "norm": norm, "norm_prime": norm_prime, "affine": affine,
        "perturbation": perturbation, "violator": violator, "control": control,
        "probes": probes, "t_grid": t_grid, "triples": triples,
        "axioms": axioms, "stopping": stopping, "uniform": uniform,
        "tolerances": tolerances, "perturbation_b": perturbation_b,
        "affine_b": affine_b,
    })


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _build_norm(d: dict):
    if d["kind"] == "crisp-induced":
        return CrispInduced(d["p"], d["base_norm"])
    if d["kind"] == "quadratic-ratio":
        return QuadraticRatio(d["base_norm"])
    return Indicator(d["base_norm"])


def _build_control(d: dict):
    if d["kind"] == "constant":
        return Constant(d["c"])
    return PowerSum(d["eps"], d["p"])


def _build_rule(cfg: dict) -> StoppingRule | None:
    s = cfg["stopping"]
    if s is None:
        return None
    return StoppingRule(int(s["n_max"]), float(s["successive_tol"]),
                        float(s["argument_cap"]))


def _build_probes(cfg: dict) -> np.ndarray:
    pc = cfg["probes"]
    dim = cfg["dimension"]
    if pc["points"]:
        pts = np.atleast_2d(np.asarray(pc["points"], dtype=float))
        if pts.shape[1] != dim:
            raise ConfigError("probes.points", f"points must have dimension {dim}")
    else:
        count, radius, r0 = pc["count"], pc["radius"], pc["min_radius"]
        if pc["spacing"] == "geometric":
            radii = np.geomspace(r0, radius, count)
        else:
            radii = np.linspace(radius / count, radius, count)
        if dim == 1:
            signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
            pts = (radii * signs)[:, None]
        else:
            rng = np.random.default_rng([cfg["seed"], 7])
            dirs = rng.normal(size=(count, dim))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            pts = radii[:, None] * dirs
    extra = pc["extra_points"]
    if extra:
        more = np.atleast_2d(np.asarray(extra, dtype=float))
        if more.shape[1] != dim:
            raise ConfigError("probes.extra_points",
                              f"points must have dimension {dim}")
        pts = np.vstack([pts, more])
    return pts


def _build_tgrid(cfg: dict) -> np.ndarray:
    g = cfg["t_grid"]
    return geometric_t_grid(float(g["t_min"]), int(g["decades"]),
                            int(g["per_decade"]))


def _build_triples(cfg: dict):
    t = cfg["triples"]
    return standard_triples(cfg["dimension"], int(t["count"]),
                            float(t["radius"]), cfg["seed"])


def _build_function(cfg: dict, affine_key: str = "affine",
                    perturbation_key: str = "perturbation"):
    """Returns (fn, certified control or None)."""
    if cfg["violator"] is not None and affine_key == "affine":
        return make_violator(cfg["violator"], cfg["dimension"]), None
    aff = cfg[affine_key] if cfg.get(affine_key) is not None else cfg["affine"]
    pert = cfg.get(perturbation_key)
    if pert is None:
        return make_affine(aff["a"], aff["b"]), None
    made = make_perturbed_affine(aff["a"], aff["b"], perturbation_from_dict(pert))
    return made.fn, (made.control if made.certified else None)


def _pick_control(cfg: dict, certificate):
    if cfg["control"] is not None:
        return _build_control(cfg["control"])
    if certificate is not None:
        return certificate
    return Constant(0.0)   # exact solutions are dominated by the zero control


# ---------------------------------------------------------------------------
# experiment suites
# ---------------------------------------------------------------------------

def _suite_axioms(cfg: dict) -> dict:
    spec = _build_norm(cfg["norm"])
    n_plans = int(cfg["axioms"]["plans"])
    dim = cfg["dimension"]
    failures = []
    first = None
    for k in range(n_plans):
        plan = standard_plan(dim, cfg["seed"]) if k == 0 \
            else random_plan(dim, cfg["seed"] + k)
        report = check_axioms(spec, plan)
        if first is None:
            first = report.to_dict()
        if not report.passed:
            failures.append(report.to_dict())
    return {"pass": not failures, "plans": n_plans, "norm": cfg["norm"],
            "failures": failures[:3], "sample_report": first}


def _suite_solution_check(cfg: dict) -> dict:
    fn, _ = _build_function(cfg)
    sample = _build_triples(cfg)
    tol = float(cfg["tolerances"]["solution_tol"])
    sc = check_solution(fn, sample, tol)
    probes = _build_probes(cfg)
    sub = substitution_suite(fn, probes, tol)
    return {"pass": sc.passed and sub.passed,
            "solution": sc.to_dict(), "substitutions": sub.to_dict()}


def _suite_extract(cfg: dict) -> dict:
    fn, certificate = _build_function(cfg)
    control = _pick_control(cfg, certificate)
    ext = extract_affine(fn, _build_probes(cfg), _build_rule(cfg),
                         alpha=control.alpha)
    return {"pass": ext.converged, "extraction": ext.to_dict()}


def _suite_verify_nonuniform(cfg: dict) -> dict:
    fn, certificate = _build_function(cfg)
    control = _pick_control(cfg, certificate)
    norm = _build_norm(cfg["norm"])
    norm_prime = _build_norm(cfg["norm_prime"])
    t_grid = _build_tgrid(cfg)
    margin_tol = float(cfg["tolerances"]["margin_tol"])
    hyp = verify_hypothesis_nonuniform(fn, control, norm, norm_prime,
                                       _build_triples(cfg), t_grid, margin_tol)
    ext = extract_affine(fn, _build_probes(cfg), _build_rule(cfg),
                         alpha=control.alpha)
    bound = verify_bound_nonuniform(fn, ext, control, norm, norm_prime,
                                    control.alpha, t_grid=t_grid,
                                    margin_tol=margin_tol)
    return {"pass": hyp.passed and ext.converged and bound.passed,
            "hypothesis_nonuniform": hyp.to_dict(),
            "extraction": ext.to_dict(),
            "bound_nonuniform": bound.to_dict()}


def _suite_verify_uniform(cfg: dict) -> dict:
    fn, certificate = _build_function(cfg)
    control = _pick_control(cfg, certificate)
    norm = _build_norm(cfg["norm"])
    u = cfg["uniform"]
    ext = extract_affine(fn, _build_probes(cfg), _build_rule(cfg),
                         alpha=control.alpha)
    ub = verify_bound_uniform(fn, ext, control, norm, float(u["delta"]),
                              float(u["alpha_level"]),
                              triples=_build_triples(cfg))
    ul = verify_uniform_limit(fn, ext, control, norm, u["t_schedule"],
                              u["eps_schedule"], ratio_cap=float(u["ratio_cap"]),
                              margin_tol=float(cfg["tolerances"]["margin_tol"]))
    return {"pass": ext.converged and ub.passed and ul.passed,
            "extraction": ext.to_dict(),
            "bound_uniform": ub.to_dict(),
            "uniform_limit": ul.to_dict()}


def _suite_corollary53(cfg: dict) -> dict:
    pert = cfg["perturbation"]
    if pert is None or pert["family"] != "power-growth":
        raise ConfigError("perturbation",
                          "corollary53 requires a power-growth perturbation")
    fn, certificate = _build_function(cfg)
    control = _pick_control(cfg, certificate)
    if not isinstance(control, PowerSum):
        raise ConfigError("control", "corollary53 requires a power-sum control")
    u = cfg["uniform"]
    rep = corollary53_suite(
        control.eps, control.p, fn, _build_probes(cfg), u["t_schedule"],
        u["eps_schedule"], norm=_build_norm(cfg["norm"]),
        norm_prime=_build_norm(cfg["norm_prime"]), triples=_build_triples(cfg),
        rule=_build_rule(cfg), t_grid=_build_tgrid(cfg),
        ratio_cap=float(u["ratio_cap"]),
        margin_tol=float(cfg["tolerances"]["margin_tol"]))
    return {"pass": rep.passed, "corollary53": rep.to_dict()}


def _suite_uniqueness(cfg: dict) -> dict:
    fn1, certificate = _build_function(cfg)
    fn2, _ = _build_function(cfg, affine_key="affine_b",
                             perturbation_key="perturbation_b")
    control = _pick_control(cfg, certificate)
    result = uniqueness_probe(fn1, fn2, _build_probes(cfg), _build_rule(cfg),
                              alpha=control.alpha)
    tol = float(cfg["tolerances"]["uniqueness_tol"])
    return {"pass": result.max_discrepancy <= tol,
            "tolerance": tol, "uniqueness": result.to_dict()}


def _run_suites(cfg: dict) -> dict:
    exp = cfg["experiment"]
    if exp == "axioms":
        return {"axioms": _suite_axioms(cfg)}
    if exp == "solution-check":
        return {"solution_check": _suite_solution_check(cfg)}
    if exp == "extract":
        return {"extract": _suite_extract(cfg)}
    if exp == "verify-nonuniform":
        return {"verify_nonuniform": _suite_verify_nonuniform(cfg)}
    if exp == "verify-uniform":
        return {"verify_uniform": _suite_verify_uniform(cfg)}
    if exp == "corollary53":
        return {"corollary53": _suite_corollary53(cfg)}
    if exp == "uniqueness":
        return {"uniqueness": _suite_uniqueness(cfg)}
    suites = {"axioms": _suite_axioms(cfg)}
    if cfg["perturbation"] is None and cfg["violator"] is None:
        suites["solution_check"] = _suite_solution_check(cfg)
    suites["verify_nonuniform"] = _suite_verify_nonuniform(cfg)
    suites["verify_uniform"] = _suite_verify_uniform(cfg)
    if cfg["perturbation"] is not None:
        suites["uniqueness"] = _suite_uniqueness(cfg)
        if cfg["perturbation"]["family"] == "power-growth":
            suites["corollary53"] = _suite_corollary53(cfg)
    return suites


def run(config: dict) -> dict:
    """Execute the configured experiment and return the report dict."""
    t0 = time.perf_counter()
    digest = sha256_digest(config)
    try:
        suites = _run_suites(config)
        error = None
    except NonConvergedError as exc:
        suites = {"error": {"pass": False, "detail": str(exc)}}
        error = str(exc)
    overall = all(s.get("pass", False) for s in suites.values())
    for suite in suites.values():
        suite["seed"] = config["seed"]
        suite["config_digest"] = digest
    report = {
        "tool": "hyerslab",
        "tool_version": __version__,
        "experiment": config["experiment"],
        "seed": config["seed"],
        "config": config,
        "config_digest": digest,
        "suites": suites,
        "overall_pass": overall and error is None,
        "wall_clock_s": time.perf_counter() - t0,
    }
    return to_jsonable(report)


# ---------------------------------------------------------------------------
# plot data emission
# ---------------------------------------------------------------------------

def _find_series(report: dict, suite_key: str) -> dict:
    for suite in report.get("suites", {}).values():
        if suite_key in suite:
            return suite[suite_key]
    raise InputDomainError(f"report carries no '{suite_key}' series; "
                           "run the matching experiment first")


def _csv(path: str, comment: str, header: list[str], rows: list[list[float]]):
    lines = [comment, ",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_plot_data(report: dict, what: str, out_path: str) -> None:
    """Write one plot-ready CSV; rows sorted by the first column."""
    if what == "residual-vs-x":
        bound = _find_series(report, "bound_nonuniform")
        probes = np.asarray(bound["probes"], dtype=float)
        xs = probes[:, 0] if probes.shape[1] == 1 \
            else np.linalg.norm(probes, axis=1)
        rows = sorted(zip(xs, bound["residuals"], bound["bounds"]))
        _csv(out_path,
             "# columns: x = probe coordinate (signed for d=1, Euclidean norm "
             "otherwise); residual = ||f(x)-A(x)-f(0)||; "
             "bound = phi(x,0,0)/(3-alpha)",
             ["x", "residual", "bound"], [list(r) for r in rows])
    elif what == "membership-vs-t":
        ul = _find_series(report, "uniform_limit")
        rows = [[t, m, 1.0 - e] for t, m, e in
                zip(ul["t_schedule"], ul["memberships_at_worst"],
                    ul["eps_schedule"])]
        _csv(out_path,
             "# columns: t = membership radius multiplier; membership = "
             "N(f(x)-A(x)-f(0), t*phi~(0,0,x)) at the worst probe; "
             "target = 1 - eps for the paired eps",
             ["t", "membership", "target"], sorted(rows))
    elif what == "bound-tightness":
        bound = _find_series(report, "bound_nonuniform")
        lhs = np.asarray(bound["lhs_at_worst"], dtype=float)
        rhs = np.asarray(bound["rhs_at_worst"], dtype=float)
        headroom = np.where(rhs < 1.0, 1.0 - rhs, 1.0)
        normalized = (lhs - rhs) / headroom
        rows = [[t, m, s] for t, m, s in
                zip(bound["t_grid"], bound["per_t_min_margin"], normalized)]
        _csv(out_path,
             "# columns: t; min_margin = min over probes of "
             "[N(residual,t) - N'(phi,(3-alpha)t)]; normalized_margin = "
             "margin at the worst probe scaled by the bound's headroom 1-N'",
             ["t", "min_margin", "normalized_margin"], sorted(rows))
    else:
        raise InputDomainError(f"unknown plot kind '{what}'")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _plot_path(out_path: str, what: str) -> str:
    p = Path(out_path)
    return str(p.with_name(p.stem + f".{what}.csv"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hyerslab",
        description="Verify fuzzy stability bounds of the affine functional "
                    "equation on manufactured test functions.")
    sub = parser.add_subparsers(dest="command")
    run_p = sub.add_parser("run", help="execute a JSON experiment config")
    run_p.add_argument("--config", required=True, help="path to the config JSON")
    run_p.add_argument("--out", default="report.json",
                       help="where to write the JSON report")
    run_p.add_argument("--plot", action="append", choices=PLOT_KINDS,
                       default=[], help="also emit this plot-ready CSV")
    sub.add_parser("version", help="print the tool version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(f"hyerslab {__version__}")
        return 0
    if args.command != "run":
        parser.print_help()
        return 2

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2

    env_seed = os.environ.get("HYERSLAB_SEED")
    if env_seed is not None:
        try:
            raw["seed"] = int(env_seed)
        except ValueError:
            print("error: HYERSLAB_SEED must be an integer", file=sys.stderr)
            return 2

    try:
        config = parse_config(raw)
        report = run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputDomainError, DivergentSeriesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    write_json(args.out, report)
    for name, suite in report["suites"].items():
        status = "PASS" if suite.get("pass", False) else "FAIL"
        print(f"[{status}] {name}")
    print(f"report: {args.out} (digest {report['config_digest'][:12]})")

    try:
        for what in args.plot:
            path = _plot_path(args.out, what)
            emit_plot_data(report, what, path)
            print(f"plot data: {path}")
    except InputDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    return 0 if report["overall_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
