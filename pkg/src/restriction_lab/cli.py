"""Config-driven experiment runner.

    restriction-lab <kind> --config <path> [--out <dir>] [--threads N] [--seed S]

The config is a single JSON object; see ``docs/config.md`` for the schema.
Each run writes ``<out>/report.json`` and ``<out>/data.csv`` and exits with
status 0 iff every asserted check in the report passes.
"""
import argparse
import copy
import json
import logging
import math
import os
import sys

import numpy as np

from . import kernels
from .errors import InvalidParameterError, ResolutionError
from .jsonio import csv_text, dumps, write_atomic

log = logging.getLogger("restriction_lab")

KINDS = ("props", "partition", "counting", "bilinear", "scan")
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RESOLUTION = 3

_PARAM_KEYS = {"R", "epsilon", "K", "delta", "delta1", "delta2", "p0", "alpha", "seed", "M"}


class ConfigError(ValueError):
    """The experiment config is malformed."""


# -- checks -----------------------------------------------------------------

def check(name, measured, threshold, relation="<="):
    """One asserted comparison; ``threshold`` is a pair for ``in``."""
    m = float(measured) if not isinstance(measured, (list, tuple)) else measured
    if relation == "<=":
        ok = m <= threshold
    elif relation == ">=":
        ok = m >= threshold
    elif relation == "==":
        ok = m == threshold
    elif relation == "in":
        ok = threshold[0] <= m <= threshold[1]
    else:
        raise ValueError(f"unknown relation {relation!r}")
    ok = bool(ok) and not (isinstance(m, float) and math.isnan(m))
    return {"name": name, "measured": m, "relation": relation,
            "threshold": list(threshold) if relation == "in" else threshold, "pass": ok}


def loglog_slope(xs, ys):
    """Least-squares slope of log y against log x; nan if any y <= 0."""
    ys = np.asarray(ys, float)
    if len(xs) < 2 or np.any(ys <= 0):
        return math.nan
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(ys), 1)[0])


# -- config -----------------------------------------------------------------

def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def normalize_config(cfg, kind=None, seed=None):
    """Validate and fill defaults. Returns a new dict."""
    cfg = copy.deepcopy(cfg)
    k = cfg.get("kind", kind)
    if kind is not None and k != kind:
        raise ConfigError(f"config kind {k!r} does not match command {kind!r}")
    if k not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}; got {k!r}")
    cfg["kind"] = k
    params = cfg.setdefault("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown params: {', '.join(sorted(unknown))}")
    if seed is not None:
        params["seed"] = int(seed)
    params.setdefault("seed", 0)
    try:
        make_params(params)
    except (InvalidParameterError, TypeError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc
    fn = cfg.get("function", {"kind": "constant"})
    fns = fn if isinstance(fn, list) else [fn]
    if not fns or not all(isinstance(f, dict) for f in fns):
        raise ConfigError("function must be an object or a non-empty list of objects")
    for f in fns:
        if f.get("kind") in ("random_smooth", "random-smooth") and "seed" not in f:
            raise ConfigError("random_smooth functions need a seed")
    cfg["function"] = fns
    rl = cfg.get("R_list", [params.get("R", 64.0)])
    if not isinstance(rl, list) or not rl or not all(isinstance(r, (int, float)) for r in rl):
        raise ConfigError("R_list must be a non-empty list of numbers")
    if any(b <= a for a, b in zip(rl, rl[1:])):
        raise ConfigError("R_list must be strictly increasing")
    cfg["R_list"] = [float(r) for r in rl]
    tol = cfg.setdefault("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances must be an object")
    section = cfg.setdefault(k, {})
    if not isinstance(section, dict):
        raise ConfigError(f"section {k!r} must be an object")
    return cfg


def make_params(d, **over):
    from .geometry import Params
    d = dict(d)
    d.update(over)
    if "M" in d:
        d["M_override"] = d.pop("M")
    return Params(**d)


def make_families(cfg, shift=0):
    """Function families of the config; random seeds are shifted by ``shift``."""
    from .families import make_family
    out = []
    for spec in cfg["function"]:
        spec = dict(spec)
        if "seed" in spec:
            spec["seed"] = int(spec["seed"]) + shift
        if spec.get("kind") in ("single_omega", "single-omega"):
            spec.setdefault("R", cfg["params"].get("R", 64.0))
        if spec.get("kind") in ("single_cap", "single-cap"):
            spec.setdefault("K", cfg["params"].get("K", 4))
        try:
            out.append(make_family(spec))
        except (KeyError, InvalidParameterError) as exc:
            raise ConfigError(f"bad function spec {spec}: {exc}") from exc
    return out


def _fn_name(fam):
    return fam.name.replace(",", ";")


# -- props --------------------------------------------------------------------

def run_props(cfg):
    from .wavepacket import decompose, verify_properties
    sec = cfg["props"]
    tol = cfg["tolerances"]
    thresholds = {k: float(tol[f"prop{k}"]) for k in range(2, 7) if f"prop{k}" in tol}
    margin = float(sec.get("resolution_margin", 1.4))
    seed = int(sec.get("seed", cfg["params"]["seed"]))
    checks, rows, results = [], [], []
    for R in cfg["R_list"]:
        p = make_params(cfg["params"], R=R)
        for fam in make_families(cfg):
            name = _fn_name(fam)
            log.info("props R=%g f=%s", R, name)
            f = fam.sample(1.0 / (8.0 * R * margin))
            rep = verify_properties(decompose(f, p), n_points=int(sec.get("n_points", 1000)),
                                    n_subcollections=int(sec.get("n_subcollections", 64)),
                                    thresholds=thresholds, seed=seed)
            fam.clear()
            results.append({"R": R, "function": name, "report": rep.to_dict()})
            for r in rep.results:
                rel = "==" if r.property == 1 else "<="
                checks.append(check(f"R={R:g} {name} property {r.property}", r.measured,
                                    r.threshold, rel))
                rows.append([R, name, r.property, r.measured, r.threshold, int(r.passed)])
    header = ["R", "function", "property", "measured", "threshold", "pass"]
    return results, checks, (header, rows)


# -- partition ----------------------------------------------------------------

def _mass_sample(cfg, sec, p):
    from .extension import evaluate_multires
    from .polypart import MassSample
    seed = int(sec.get("seed", cfg["params"]["seed"]))
    base = MassSample.uniform_ball(int(sec.get("n_points", 4096)), p.R, seed=seed)
    mass = sec.get("mass", "uniform")
    if mass == "uniform":
        return base
    if mass == "extension":
        fam = make_families(cfg)[0]
        w = np.abs(evaluate_multires(fam, base.points)) ** p.p0
        return MassSample(base.points, w)
    raise ConfigError(f"unknown mass {mass!r}")


def _partition(cfg, sec, p):
    from .polypart import partition
    sample = _mass_sample(cfg, sec, p)
    part = partition(sample, p, eta=float(sec.get("eta", 0.05)),
                     C_deg=float(sec.get("C_deg", 4.0)), seed=int(sec.get("seed", p.seed)))
    return part, sample


def _partition_checks(part, p, sec, tol):
    from .polypart import random_line_check
    C_deg = float(sec.get("C_deg", 4.0))
    n_cells = len(part.nonempty_cells)
    lines = random_line_check(part, int(sec.get("n_lines", 1000)), p.R,
                              seed=int(sec.get("seed", p.seed)) + 1)
    checks = [
        check("nonempty cells >= 2", n_cells, int(tol.get("min_cells", 2)), ">="),
        check("nonempty cells <= 2^rounds", n_cells, int(tol.get("max_cells", 2 ** part.rounds))),
        check("nonempty-cell mass ratio", part.mass_ratio, float(tol.get("mass_ratio", 3.4))),
        check("product degree <= C_deg * M", part.degree, C_deg * p.M),
        check("line crossing violations", lines["violations"], 0, "=="),
    ]
    return checks, lines


def run_partition(cfg):
    sec = cfg["partition"]
    p = make_params(cfg["params"])
    part, _ = _partition(cfg, sec, p)
    checks, lines = _partition_checks(part, p, sec, cfg["tolerances"])
    results = {"partition": part.to_dict(), "nonempty_cells": len(part.nonempty_cells),
               "mass_ratio": part.mass_ratio, "ratio_bound": part.ratio_bound, "lines": lines}
    rows = [[c, part.masses.get(c, 0.0), part.interior_masses.get(c, 0.0)]
            for c in sorted(part.masses)]
    rows.append(["wall", 0.0, part.wall_mass])
    return results, checks, (["cell", "mass", "interior_mass"], rows)


# -- counting -----------------------------------------------------------------

_NAMED_WALLS = {"x1": {(1, 0, 0): 1.0}, "x2": {(0, 1, 0): 1.0}, "x3": {(0, 0, 1): 1.0}}


def wall_partition(spec, p):
    """Partition whose factors are given by name ("x1") or by {"i,j,k": c} terms."""
    from .polypart import Partition, TrivariatePolynomial
    facs = spec.get("factors", [spec.get("factor")])
    polys = []
    for fac in facs:
        if isinstance(fac, str) and fac in _NAMED_WALLS:
            terms = _NAMED_WALLS[fac]
        elif isinstance(fac, dict):
            terms = {tuple(int(v) for v in k.split(",")): float(c) for k, c in fac.items()}
        else:
            raise ConfigError(f"bad wall factor {fac!r}")
        polys.append(TrivariatePolynomial.from_terms(terms))
    return Partition(polys, p.R, p.delta)


def all_tubes(p):
    from .geometry import build_omega_caps, build_tubes
    return [t for om in build_omega_caps(p) for t in build_tubes(om, p)]


def run_counting(cfg):
    from .broad import cell_tube_incidence, sort_wall_tubes
    from .polypart import ball_cover
    sec = cfg["counting"]
    p = make_params(cfg["params"])
    seed = int(sec.get("seed", p.seed))
    tubes = all_tubes(p)
    results, checks, rows = {"tubes_total": len(tubes)}, [], []

    inc = sec.get("incidence", {})
    if inc is not None:
        part, _ = _partition(cfg, inc, p)
        rng = np.random.default_rng(seed)
        n = min(int(inc.get("n_tubes", 200)), len(tubes))
        pick = sorted(int(k) for k in rng.choice(len(tubes), n, replace=False))
        tables, rep = cell_tube_incidence(part, [tubes[k] for k in pick], p)
        results["incidence"] = dict(rep, degree=part.degree, cells=len(part.nonempty_cells))
        checks.append(check("tube-cell visits <= deg + 1", rep["max_visits"], rep["bound"]))
        checks.append(check("incidence violations", rep["violations"], 0, "=="))
        for k, v in zip(pick, tables.visits):
            rows.append(["incidence", f"tube{k}", "cells", int(v)])

    walls = sec.get("walls", [{"factor": "x1"}, {"factor": "x3", "expect_no_flat": True}])
    balls = ball_cover(p)
    results["balls"] = len(balls)
    results["walls"] = []
    for w in walls:
        part = wall_partition(w, p)
        name = w.get("name", "*".join(str(f) for f in w.get("factors", [w.get("factor")])))
        log.info("sorting tubes against wall %s over %d balls", name, len(balls))
        tables, rep = sort_wall_tubes(part, balls, tubes, p, n_cloud=int(sec.get("n_cloud", 2000)),
                                      seed=seed)
        results["walls"].append({"wall": name, "report": rep})
        checks.append(check(f"{name}: max sharp membership", rep["max_sharp_membership"],
                            float(cfg["tolerances"].get("sharp_budget", rep["sharp_budget"]))))
        checks.append(check(f"{name}: max direction count", rep["max_direction_count"],
                            float(cfg["tolerances"].get("direction_budget", rep["direction_budget"]))))
        if w.get("expect_no_flat"):
            checks.append(check(f"{name}: tangential list empty", rep["flat_total"], 0, "=="))
        dc = tables.direction_counts()
        for j in range(len(balls)):
            rows.append([name, f"ball{j}", "flat", len(tables.flat.get(j, []))])
            rows.append([name, f"ball{j}", "sharp", len(tables.sharp.get(j, []))])
            rows.append([name, f"ball{j}", "directions", int(dc.get(j, 0))])
    return results, checks, (["section", "item", "quantity", "value"], rows)


# -- bilinear -----------------------------------------------------------------

_BILINEAR_PARTS = ("orthogonality", "l2", "l4_scan", "convolution", "overlap")


def _orthogonality(cfg, sec, rows):
    from .broad import orthogonality_trial
    p = make_params(cfg["params"], R=float(sec.get("R", 64)), K=int(sec.get("K", 8)))
    bound = float(cfg["tolerances"].get("orthogonality_ratio", sec.get("bound", 100.0)))
    base = int(sec.get("seed", p.seed))
    out = []
    for t in range(int(sec.get("trials", 20))):
        fam = make_families(cfg, shift=t)[0]
        log.info("orthogonality trial %d", t)
        c, rep = orthogonality_trial(fam, p, base + t, n=int(sec.get("n", 16)), bound=bound)
        out.append({"config": c.to_dict(), "report": rep.to_dict()})
        rows.append(["orthogonality", f"trial{t}", "ratio", rep.ratio])
    ratios = [o["report"]["ratio"] for o in out]
    worst = max((r for r in ratios if r is not None and not math.isnan(r)), default=math.nan)
    flagged = sum(1 for o in out if o["report"]["flag"])
    return out, [check("orthogonality: worst ratio", worst, bound),
                 check("orthogonality: flagged trials", flagged, 0, "==")]


def _l2(cfg, sec, rows):
    from .broad import flat_bilinear_run, random_tangential_config
    p = make_params(cfg["params"], R=float(sec.get("R", 64)), K=int(sec.get("K", 4)))
    factor = float(cfg["tolerances"].get("l2_factor", sec.get("factor", 10.0)))
    base = int(sec.get("seed", p.seed))
    out, worst = [], 0.0
    for t in range(int(sec.get("configs", 10))):
        fam = make_families(cfg, shift=t)[0]
        c = random_tangential_config(p, base + t, separated=True)
        log.info("l2 configuration %d", t)
        nrm, _ = flat_bilinear_run(fam, p, c, n_region=int(sec.get("n_region", 8000)))
        lhs, rhs = nrm.pairs["L2"]
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        worst = max(worst, ratio)
        out.append({"config": c.to_dict(), "norms": nrm.to_dict(), "ratio": ratio})
        rows.append(["l2", f"config{t}", "lhs", lhs])
        rows.append(["l2", f"config{t}", "rhs", rhs])
    return out, [check("l2: worst lhs / rhs", worst, factor)]


def _l4_scan(cfg, sec, rows):
    from .broad import flat_bilinear_run, separated_config
    R_list = [float(r) for r in sec.get("R_list", [64, 128, 256])]
    seeds = [int(s) for s in sec.get("seeds", [0, 1, 2, 3])]
    lo, hi = cfg["tolerances"].get("l4_slope", sec.get("slope", [-0.3, 0.05]))
    xs, ys, per_seed = [], [], {}
    out = []
    for R in R_list:
        p = make_params(cfg["params"], R=R, K=int(sec.get("K", 4)))
        c = separated_config(p, sec.get("orientation", "diag"))
        for s in seeds:
            fam = make_families(cfg, shift=s)[0]
            log.info("l4 scan R=%g shift=%d", R, s)
            nrm, _ = flat_bilinear_run(fam, p, c, n_region=int(sec.get("n_region", 8000)))
            q = nrm.L4 / math.sqrt(nrm.flat_mass) if nrm.flat_mass > 0 else math.nan
            xs.append(R)
            ys.append(q)
            per_seed.setdefault(s, []).append(q)
            out.append({"R": R, "shift": s, "caps": [cp.to_dict() for cp in c.caps],
                        "norms": nrm.to_dict(), "normalized_L4": q})
            rows.append(["l4_scan", f"R={R:g};shift={s}", "normalized_L4", q])
    slope = loglog_slope(xs, ys)
    slopes = {str(s): loglog_slope(R_list, v) for s, v in per_seed.items()}
    for s, v in slopes.items():
        rows.append(["l4_scan", f"shift={s}", "slope", v])
    rows.append(["l4_scan", "pooled", "slope", slope])
    res = {"runs": out, "pooled_slope": slope, "per_seed_slopes": slopes}
    return res, [check("l4: pooled log-log slope", slope, (lo, hi), "in")]


def _convolution(cfg, sec, rows):
    from .extension import cap_measure_convolution_sup, diagonal_omega_pair
    R_list = [float(r) for r in sec.get("R_list", [64, 128, 256])]
    lo, hi = cfg["tolerances"].get("convolution_slope", sec.get("slope", [-0.65, -0.35]))
    vals, out = [], []
    for R in R_list:
        p = make_params(cfg["params"], R=R, K=int(sec.get("K", 4)))
        o1, o2 = diagonal_omega_pair(p, float(sec.get("gap", 0.5)))
        cs = cap_measure_convolution_sup(o1, o2, p)
        vals.append(cs.value)
        out.append({"R": R, "omega1": o1.to_dict(), "omega2": o2.to_dict(), "sup": cs.value,
                    "argmax": list(cs.argmax), "gap": o2.center[0] - o1.center[0]})
        rows.append(["convolution", f"R={R:g}", "sup", cs.value])
    slope = loglog_slope(R_list, vals)
    rows.append(["convolution", "fit", "slope", slope])
    return {"runs": out, "slope": slope}, [check("convolution: log-log slope", slope, (lo, hi), "in")]


def _overlap(cfg, sec, rows):
    from .geometry import Cylinder, Tube, normal_at, tube_overlap_measure
    tol = cfg["tolerances"]
    seed = int(sec.get("seed", cfg["params"]["seed"]))
    n_unit = int(sec.get("unit_samples", 1_000_000))
    a = Cylinder((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 1.0, 2.0)
    b = Cylinder((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), 1.0, 2.0)
    unit = tube_overlap_measure(a, b, n_unit, seed)
    rel = abs(unit.volume - 16.0 / 3.0) / (16.0 / 3.0)
    p = make_params(cfg["params"], R=float(sec.get("R", 64)), K=int(sec.get("K", 8)))
    r, R, K = p.tube_radius, p.R, p.K
    c1, c2 = (0.0, 0.0), (1.0 / K, 1.0 / K)
    t1 = Tube((0.0, 0.0), tuple(normal_at(c1)), r, R, c1)
    t2 = Tube((0.0, 0.0), tuple(normal_at(c2)), r, R, c2)
    tv = tube_overlap_measure(t1, t2, int(sec.get("tube_samples", 1_000_000)), seed)
    ref = K * R ** 1.5
    factor = float(tol.get("overlap_factor", 8.0))
    rows += [["overlap", "unit_cylinders", "volume", unit.volume],
             ["overlap", "unit_cylinders", "stderr", unit.stderr],
             ["overlap", "transverse_tubes", "volume", tv.volume],
             ["overlap", "transverse_tubes", "reference", ref]]
    res = {"unit": {"volume": unit.volume, "stderr": unit.stderr, "exact": 16.0 / 3.0,
                    "relative_error": rel},
           "tubes": {"volume": tv.volume, "stderr": tv.stderr, "reference": ref,
                     "ratio": tv.volume / ref}}
    return res, [check("overlap: unit cylinders relative error", rel,
                       float(tol.get("overlap_unit", 0.02))),
                 check("overlap: tube volume / K R^(3/2)", tv.volume / ref,
                       (1.0 / factor, factor), "in")]


def run_bilinear(cfg):
    sec = cfg["bilinear"]
    parts = [k for k in _BILINEAR_PARTS if k in sec] or list(_BILINEAR_PARTS)
    funcs = {"orthogonality": _orthogonality, "l2": _l2, "l4_scan": _l4_scan,
             "convolution": _convolution, "overlap": _overlap}
    results, checks, rows = {}, [], []
    for k in parts:
        sub = sec.get(k) or {}
        res, ch = funcs[k](cfg, sub, rows)
        results[k] = res
        checks += ch
    return results, checks, (["section", "item", "quantity", "value"], rows)


# -- scan ---------------------------------------------------------------------

def run_scan(cfg):
    from .extension import EvalGrid, evaluate_multires, lp_norm
    sec = cfg["scan"]
    p = make_params(cfg["params"])
    max_slope = float(cfg["tolerances"].get("scan_slope", sec.get("max_slope", 0.2)))
    h_max = float(sec.get("h_max", 1.0 / 64))
    results, checks, rows, fits = [], [], [], []
    for fam in make_families(cfg):
        name = _fn_name(fam)
        sup = fam.sup_norm(h_max)
        vals = []
        for R in cfg["R_list"]:
            log.info("scan R=%g f=%s", R, name)
            grid = EvalGrid.ball(R, int(sec.get("n_shells", 20)), int(sec.get("per_shell", 96)))
            v = evaluate_multires(fam, grid, h_max)
            q = lp_norm(v, grid, p.p0) / sup if sup > 0 else 0.0
            vals.append(q)
            rows.append([R, f"{name}:Lp0/sup", q])
        fam.clear()
        slope = loglog_slope(cfg["R_list"], vals) if all(v > 0 for v in vals) else 0.0
        fits.append(["fit", f"{name}:slope", slope])
        results.append({"function": name, "sup_norm": sup, "p0": p.p0,
                        "norms": dict(zip((f"{r:g}" for r in cfg["R_list"]), vals)),
                        "slope": slope})
        if len(cfg["R_list"]) > 1:
            checks.append(check(f"{name}: log-log slope", slope, max_slope))
    return results, checks, (["R", "quantity", "value"], rows + fits)


RUNNERS = {"props": run_props, "partition": run_partition, "counting": run_counting,
           "bilinear": run_bilinear, "scan": run_scan}


def run_experiment(cfg, out_dir=None, threads=1):
    """Run a normalized config; write the outputs if ``out_dir`` is given.

    Returns the report dict. All BLAS pools are pinned to one thread so the
    reductions, and hence the bytes written, do not depend on ``threads``.
    """
    from threadpoolctl import threadpool_limits
    old = kernels.get_num_threads()
    kernels.set_num_threads(threads)
    try:
        with threadpool_limits(1):
            results, checks, (header, rows) = RUNNERS[cfg["kind"]](cfg)
    finally:
        kernels.set_num_threads(old)
    report = {"kind": cfg["kind"], "config": cfg, "backend": kernels.BACKEND,
              "results": results, "checks": checks,
              "all_pass": all(c["pass"] for c in checks)}
    if out_dir is not None:
        write_atomic(os.path.join(out_dir, "report.json"), dumps(report))
        write_atomic(os.path.join(out_dir, "data.csv"), csv_text(header, rows))
    return report


def build_parser():
    ap = argparse.ArgumentParser(prog="restriction-lab", description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--threads", type=int, default=1, help="kernel threads (default: 1)")
    ap.add_argument("--seed", type=int, default=None, help="override params.seed")
    ap.add_argument("-q", "--quiet", action="store_true", help="only print the summary")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = normalize_config(load_config(args.config), args.kind, args.seed)
        report = run_experiment(cfg, args.out, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(f"resolution error: {exc}; refine the frequency grid to h <= "
              f"{exc.required_h:.6g}", file=sys.stderr)
        return EXIT_RESOLUTION
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for c in report["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: {c['measured']!r} "
              f"{c['relation']} {c['threshold']!r}")
    print(f"{'all checks pass' if report['all_pass'] else 'some checks FAIL'}; "
          f"wrote {os.path.join(args.out, 'report.json')}")
    return 0 if report["all_pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
