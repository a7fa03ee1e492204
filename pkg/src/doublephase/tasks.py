"""Task runners behind the command line.

Each runner takes an :class:`~doublephase.config.ExperimentConfig` and returns
a :class:`TaskResult`: a JSON-ready payload, CSV tables, named checks and any
solutions to checkpoint.  Nothing here reads the clock, so payloads depend
only on the config and seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RANDOMISED, ExperimentConfig
from .cubes import CubeFamily
from .errors import ConfigError, InputError
from .fields import luxemburg_norm, modular
from .grid import Grid, GridField, ball, read_field
from .maximal import (
    cz_decompose,
    shifted_domination_check,
    spike_family_ratios,
    verify_modular_boundedness,
)
from .muckenhoupt import (
    DEFAULT_KINDS,
    TestFunctionGen,
    estimate_class_A,
    verify_improved_jensen,
    verify_jensen,
    verify_left_open,
)
from .poincare import random_bump_trials, zero_set_sweep
from .solver import (
    SolveConfig,
    caccioppoli_sweep,
    holder_diagnostic,
    linfty_sweep,
    minimize,
    node_grid,
)
from .weights import ap_products

__all__ = ["TaskResult", "BOUNDARY_DATA", "run_task"]


@dataclass
class TaskResult:
    payload: dict
    tables: dict = field(default_factory=dict)  # name -> list of row dicts
    checks: list = field(default_factory=list)  # {"name", "passed", "value", "limit"}
    solutions: dict = field(default_factory=dict)  # name -> Solution

    def check(self, name: str, passed: bool, value=None, limit=None):
        self.checks.append({"name": name, "passed": bool(passed), "value": value, "limit": limit})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _param(cfg: ExperimentConfig, key: str, default=None, kind=None):
    v = cfg.params.get(key, default)
    if kind is not None and v is not None:
        try:
            v = kind(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value {v!r} ({exc})", f"{cfg.source}: params.{key}") from exc
    return v


def _depth_grid(cfg: ExperimentConfig, depth: int) -> Grid:
    return Grid.box(cfg.lower, cfg.upper, 2 ** int(depth))


# -- norm -----------------------------------------------------------------------------


def _field(cfg: ExperimentConfig, spec: dict) -> GridField:
    g = cfg.grid
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return GridField.constant(g, float(spec.get("value", 1.0)))
    if kind == "indicator":
        lo, hi = spec["lower"], spec["upper"]
        inside = np.ones(g.dims, dtype=bool)
        for x, a, b in zip(g.centers(), lo, hi):
            inside &= (x >= a) & (x < b)
        return GridField(g, inside * float(spec.get("value", 1.0)))
    if kind == "power":
        r = np.sqrt(sum((x - c) ** 2 for x, c in zip(g.centers(), spec.get("center", [0.0] * g.n))))
        return GridField(g, r ** float(spec["exponent"]))
    if kind == "file":
        f = read_field(cfg.base_dir / spec["path"])
        if not f.grid.same_as(g):
            raise ConfigError("field file grid differs from the domain", f"{cfg.source}: params.field")
        return f
    raise ConfigError(f"unknown field kind {kind!r}", f"{cfg.source}: params.field")


def run_norm(cfg: ExperimentConfig) -> TaskResult:
    f = _field(cfg, _param(cfg, "field", {"kind": "constant", "value": 1.0}))
    nf = cfg.model
    nrm = luxemburg_norm(nf, f)
    rho = modular(nf, f)
    unit = modular(nf, f / nrm) if nrm > 0 else 0.0
    res = TaskResult({"norm": nrm, "modular": rho, "modularAtNorm": unit})
    if _param(cfg, "dual", False):
        dual = luxemburg_norm(nf.conjugate(), f)
        res.payload["dualNorm"] = dual
    if nrm > 0:
        res.check("unit_ball", abs(unit - 1.0) <= 1e-8, unit, 1.0)
    if "expect" in cfg.checks:
        tol = float(cfg.checks.get("tol", 1e-8))
        res.check("norm_matches_expected", abs(nrm - float(cfg.checks["expect"])) <= tol, nrm, cfg.checks["expect"])
    return res


# -- muck / jensen -----------------------------------------------------------------------


def _family(cfg: ExperimentConfig, g: Grid, depth: int) -> CubeFamily:
    kind = _param(cfg, "family", "shifted_dyadic")
    if kind == "shifted_dyadic":
        return CubeFamily.shifted_dyadic(g, depth)
    if kind == "dyadic":
        return CubeFamily.dyadic(g, depth)
    raise ConfigError(f"unknown cube family {kind!r}", f"{cfg.source}: params.family")


def run_muck(cfg: ExperimentConfig) -> TaskResult:
    depths = [int(d) for d in _param(cfg, "depths", [4, 5, 6, 7, 8])]
    rows = []
    for D in depths:
        g = _depth_grid(cfg, D)
        est = estimate_class_A(cfg.model, _family(cfg, g, D), g)
        rows.append({"depth": D, "cells": g.size, "constant": est.constant,
                     "worstCube": est.argmax.to_dict()})
    consts = [r["constant"] for r in rows]
    monotone = all(b >= a * (1 - 1e-12) for a, b in zip(consts, consts[1:]))
    res = TaskResult({"depths": rows, "final": consts[-1], "monotone": monotone},
                     tables={"class_a": [{k: r[k] for k in ("depth", "cells", "constant")} for r in rows]})
    res.check("finite", all(math.isfinite(c) for c in consts), consts[-1])
    if cfg.checks.get("monotone"):
        res.check("monotone_in_depth", monotone)
    if "ceiling" in cfg.checks:
        res.check("below_ceiling", consts[-1] <= float(cfg.checks["ceiling"]), consts[-1], cfg.checks["ceiling"])
    return res


def _jensen_once(cfg: ExperimentConfig, model, g: Grid, fam: CubeFamily, threads):
    gen = TestFunctionGen(tuple(_param(cfg, "kinds", DEFAULT_KINDS)), int(cfg.seed),
                          int(_param(cfg, "random_count", 4)))
    variant = _param(cfg, "variant", "jensen")
    if variant == "jensen":
        return verify_jensen(model, fam, g, gen, threads=threads)
    s = float(_param(cfg, "s", 1.0))
    if variant == "improved":
        return verify_improved_jensen(model, fam, g, s, gen, threads=threads)
    if variant == "left_open":
        return verify_left_open(model, fam, g, s, gen, threads=threads)
    raise ConfigError(f"unknown Jensen variant {variant!r}", f"{cfg.source}: params.variant")


def run_jensen(cfg: ExperimentConfig, threads=None) -> TaskResult:
    model = cfg.model.conjugate() if _param(cfg, "dual", False) else cfg.model
    depths = _param(cfg, "depths")
    if depths:
        rows = []
        for D in depths:
            g = _depth_grid(cfg, D)
            rep = _jensen_once(cfg, model, g, _family(cfg, g, D), threads)
            rows.append({"depth": int(D), "constant": rep.constant})
        consts = [r["constant"] for r in rows]
        res = TaskResult({"depths": rows}, tables={"jensen_depths": rows})
        if cfg.checks.get("diverge"):
            res.check("strictly_increasing_in_depth", all(b > a for a, b in zip(consts, consts[1:])), consts[-1])
        if "ceiling" in cfg.checks:
            res.check("below_ceiling", max(consts) <= float(cfg.checks["ceiling"]), max(consts),
                      cfg.checks["ceiling"])
        return res
    D = int(_param(cfg, "depth", 6))
    g = _depth_grid(cfg, D)
    fam = _family(cfg, g, D)
    rep = _jensen_once(cfg, model, g, fam, threads)
    d = rep.to_dict()
    table = [{"level": e["cube"]["level"], "corner": " ".join(map(repr, e["cube"]["corner"])),
              "ratio": e["ratio"], "witness": e["witness"]} for e in d["perCube"]]
    res = TaskResult(d, tables={"jensen_cubes": table})
    res.check("finite", math.isfinite(rep.constant), rep.constant)
    if "ceiling" in cfg.checks:
        res.check("below_ceiling", rep.constant <= float(cfg.checks["ceiling"]), rep.constant, cfg.checks["ceiling"])
    if cfg.checks.get("aq_ceiling"):
        q = cfg.model.q
        lim = np.maximum(ap_products(cfg.model.weight, q, fam, g), 1.0)
        worst = float(np.max(rep.ratios / lim))
        res.payload["aqCeilingRatio"] = worst
        res.check("respects_Aq_ceiling", worst <= 1 + 1e-10, worst, 1.0)
    return res


# -- maximal ---------------------------------------------------------------------------


def run_maximal(cfg: ExperimentConfig, threads=None) -> TaskResult:
    nf = cfg.model
    g = cfg.grid
    payload = {}
    tables = {}
    res = TaskResult(payload, tables)
    variants = _param(cfg, "variants", ["primal", "dual"])
    count = int(_param(cfg, "count", 200))
    for variant in variants:
        s = _param(cfg, "s", None, float) if variant == "leftOpen" else None
        rep = verify_modular_boundedness(nf, g, variant=variant, s=s, count=count, seed=int(cfg.seed),
                                         threads=threads)
        payload[f"boundedness_{variant}"] = rep.to_dict()
        res.check(f"bounded_{variant}", rep.passed and math.isfinite(rep.modular_constant), rep.modular_constant,
                  cfg.checks.get("ceiling"))
        if "ceiling" in cfg.checks:
            res.check(f"below_ceiling_{variant}", rep.modular_constant <= float(cfg.checks["ceiling"]),
                      rep.modular_constant, cfg.checks["ceiling"])
    cz_count = int(_param(cfg, "cz_fields", 10))
    if cz_count:
        rng = np.random.default_rng(int(cfg.seed))
        ok = 0
        for _ in range(cz_count):
            f = GridField(g, np.exp(2 * rng.normal(size=g.dims)))
            ok += bool(cz_decompose(f, float(_param(cfg, "gamma", 2.0))).check(g)["passed"])
            dom = shifted_domination_check(f)
            if not dom.passed:
                res.check("shifted_domination", False, dom.to_dict())
        payload["czFields"] = cz_count
        payload["czPassed"] = ok
        res.check("cz_invariants", ok == cz_count, ok, cz_count)
    spikes = _param(cfg, "spike_depths")
    if spikes:
        rows = spike_family_ratios(nf, [int(d) for d in spikes], lower=cfg.lower[0], upper=cfg.upper[0])
        payload["spikes"] = rows
        tables["spike_depths"] = [{k: r[k] for k in ("depth", "cells", "ratio", "normRatio")} for r in rows]
        if cfg.checks.get("diverge"):
            rs = [r["ratio"] for r in rows]
            res.check("spike_ratio_increasing", all(b > a for a, b in zip(rs, rs[1:])), rs[-1])
    return res


# -- poincare --------------------------------------------------------------------------


def run_poincare(cfg: ExperimentConfig, threads=None) -> TaskResult:
    nf = cfg.model
    g = cfg.grid
    s = float(_param(cfg, "s", 1.2))
    reps = random_bump_trials(nf, g, int(_param(cfg, "trials", 100)), int(cfg.seed), s, threads)
    ratios = [r.ratio for r in reps]
    dominance = all(r.lhs_mean <= r.lhs * (1 + 1e-12) for r in reps)
    payload = {"s": s, "trials": len(reps), "maxRatio": max(ratios), "meanDominance": dominance}
    res = TaskResult(payload, tables={"poincare_trials": [r.row() for r in reps]})
    res.check("mean_dominance", dominance)
    if "ceiling" in cfg.checks:
        res.check("below_ceiling", max(ratios) <= float(cfg.checks["ceiling"]), max(ratios), cfg.checks["ceiling"])
    fractions = _param(cfg, "fractions", [0.5, 0.25, 0.1])
    if fractions:
        center = tuple(0.5 * (a + b) for a, b in zip(cfg.lower, cfg.upper))
        radius = 0.5 * min(b - a for a, b in zip(cfg.lower, cfg.upper))
        B = ball(g, center, radius)
        sweep = zero_set_sweep(nf, B, tuple(float(f) for f in fractions), s)
        payload["zeroSet"] = [r.to_dict() | {"rawRatio": r.raw_ratio} for r in sweep]
        trend = all(b.raw_ratio / a.raw_ratio <= 2 * b.allowance / a.allowance for a, b in zip(sweep, sweep[1:]))
        res.check("zero_set_trend", trend)
    return res


# -- solve / regularity -----------------------------------------------------------------


def _x1(X):
    return X[0]


def _harmonic_quadratic(X):
    if len(X) < 2:
        raise InputError("the harmonic quadratic needs two dimensions")
    return X[0] ** 2 - X[1] ** 2


def _smooth(X):
    y = X[1] if len(X) > 1 else 0.0 * X[0]
    return np.sin(2 * np.pi * X[0]) * np.cos(np.pi * y) + X[0] * y


# name -> (boundary function, whether it is the exact discrete minimiser for a = 0, p = 2)
BOUNDARY_DATA = {
    "x1": (_x1, True),
    "harmonic_quadratic": (_harmonic_quadratic, True),
    "smooth": (_smooth, False),
}


def _solve_config(cfg: ExperimentConfig, cells: int):
    name = _param(cfg, "boundary", "smooth")
    if name not in BOUNDARY_DATA:
        raise ConfigError(f"unknown boundary data {name!r}", f"{cfg.source}: params.boundary")
    fn, exact = BOUNDARY_DATA[name]
    g = node_grid(cfg.lower, cfg.upper, cells)
    vals = fn(g.centers())
    kw = {}
    if "eps_schedule" in cfg.params:
        kw["eps_schedule"] = tuple(float(e) for e in cfg.params["eps_schedule"])
    for key, kind in (("optimizer", str), ("tol_residual", float), ("tol_energy", float), ("max_iter", int)):
        if key in cfg.params:
            kw[key] = kind(cfg.params[key])
    return SolveConfig(cfg.model, GridField(g, vals), **kw), (vals if exact else None)


def run_solve(cfg: ExperimentConfig) -> TaskResult:
    cells_list = _param(cfg, "cells", [32, 64, 128])
    if isinstance(cells_list, int):
        cells_list = [cells_list]
    rows, sols = [], {}
    for N in cells_list:
        scfg, exact = _solve_config(cfg, int(N))
        sol = minimize(scfg)
        row = {"cells": int(N), "h": scfg.grid.h, "energy": sol.energy, "residual": sol.residual,
               "iterations": sol.iterations, "converged": sol.converged}
        if exact is not None:
            row["maxError"] = float(np.max(np.abs(sol.u.values - exact)))
        rows.append(row)
        sols[f"solution_{N}"] = sol
    payload = {"runs": rows, "configHashes": [s.cfg.config_hash() for s in sols.values()]}
    res = TaskResult(payload, tables={"solve_runs": rows}, solutions=sols)
    res.check("converged", all(r["converged"] for r in rows))
    errs = [r.get("maxError") for r in rows]
    if len(rows) >= 2 and all(e is not None and e > 0 for e in errs):
        slope = float(np.polyfit(np.log([r["h"] for r in rows]), np.log(errs), 1)[0])
        payload["slope"] = slope
        if "slope" in cfg.checks:
            target, tol = float(cfg.checks["slope"]), float(cfg.checks.get("slope_tol", 0.2))
            res.check("convergence_slope", abs(slope - target) <= tol, slope, target)
    elif "slope" in cfg.checks:
        payload["slope"] = None
        res.check("convergence_slope", False, None, cfg.checks["slope"])
    if "max_error" in cfg.checks:
        worst = max((e for e in errs if e is not None), default=None)
        res.check("max_error", worst is not None and worst <= float(cfg.checks["max_error"]), worst,
                  cfg.checks["max_error"])
    return res


def run_regularity(cfg: ExperimentConfig) -> TaskResult:
    N = int(_param(cfg, "cells", 256))
    scfg, _ = _solve_config(cfg, N)
    sol = minimize(scfg)
    mid = tuple(0.5 * (a + b) for a, b in zip(cfg.lower, cfg.upper))
    center = tuple(float(c) for c in _param(cfg, "center", mid))
    r0 = float(_param(cfg, "r0", 0.45 * min(b - a for a, b in zip(cfg.lower, cfg.upper))))
    diag = holder_diagnostic(sol, center, r0, int(_param(cfg, "levels", 4)))
    pairs = [tuple(p) for p in _param(cfg, "caccioppoli_pairs", [[r0 / 4, r0 / 2], [r0 / 2, r0]])]
    cacc = caccioppoli_sweep(sol, center, pairs)
    linf = linfty_sweep(sol, center, [float(r) for r in _param(cfg, "linfty_radii", [r0 / 2, r0 / 4, r0 / 8])])
    cacc_vals = [r["ratio"] for r in cacc if not r["skipped"]]
    linf_vals = [r["ratio"] for r in linf]
    payload = {
        "solution": sol.to_dict(),
        "holder": diag.to_dict(),
        "caccioppoli": cacc,
        "caccioppoliConstant": max(cacc_vals) if cacc_vals else None,
        "linfty": linf,
        "linftyConstant": max(linf_vals) if linf_vals else None,
    }
    tables = {
        "oscillation": [{"radius": r, "osc": o} for r, o in zip(diag.radii, diag.osc)],
        "caccioppoli": cacc,
        "linfty": [{k: r[k] for k in ("radius", "scale", "lhs", "rhs", "ratio", "supRatio")} for r in linf],
    }
    res = TaskResult(payload, tables, solutions={"solution": sol})
    res.check("converged", sol.converged, sol.residual, scfg.tol_residual)
    theta_max = float(cfg.checks.get("theta_max", 0.95))
    levels = int(_param(cfg, "levels", 4))
    res.check("levels_resolved", len(diag.osc) == levels, len(diag.osc), levels)
    res.check("theta_below", bool(diag.theta) and max(diag.theta) <= theta_max,
              max(diag.theta) if diag.theta else None, theta_max)
    beta_min = float(cfg.checks.get("beta_min", 0.1))
    res.check("beta_above", diag.beta > beta_min, diag.beta, beta_min)
    r2_min = float(cfg.checks.get("r2_min", 0.9))
    res.check("fit_r2", diag.r2 >= r2_min, diag.r2, r2_min)
    for key, vals in (("caccioppoli_ceiling", cacc_vals), ("linfty_ceiling", linf_vals)):
        if key in cfg.checks and vals:
            res.check(key, max(vals) <= float(cfg.checks[key]), max(vals), cfg.checks[key])
    return res


def run_task(cfg: ExperimentConfig, threads=None) -> TaskResult:
    if cfg.task in RANDOMISED and cfg.seed is None:
        raise ConfigError(f"task '{cfg.task}' draws random numbers and needs a seed", f"{cfg.source}: seed")
    runners = {
        "norm": lambda: run_norm(cfg),
        "muck": lambda: run_muck(cfg),
        "jensen": lambda: run_jensen(cfg, threads),
        "maximal": lambda: run_maximal(cfg, threads),
        "poincare": lambda: run_poincare(cfg, threads),
        "solve": lambda: run_solve(cfg),
        "regularity": lambda: run_regularity(cfg),
    }
    return runners[cfg.task]()
