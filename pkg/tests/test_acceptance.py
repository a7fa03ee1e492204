"""Acceptance criteria 1-10.

Each criterion records one or more parts through the ``record`` fixture; the
terminal summary prints one PASS/FAIL line per criterion.  Two requirements
cannot hold as literally stated (criterion 3 anchor, criterion 8 slope); they
run unchanged as strict xfails, next to companion tests that check the
corrected statement.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from doublephase.cli import build_payload, dumps
from doublephase.cubes import CubeFamily
from doublephase.fields import luxemburg_batch
from doublephase.fixtures import FIXTURES
from doublephase.grid import Grid, GridField, ball
from doublephase.maximal import cz_decompose, hl_maximal, shifted_domination_check, verify_modular_boundedness
from doublephase.muckenhoupt import TestFunctionGen, estimate_class_A, verify_jensen
from doublephase.nfunc import (
    CLOSED_FORM,
    ConjugateNFunction,
    NFunction,
    conjugate_many,
    legendre_max,
)
from doublephase.poincare import random_bump_trials, verify_sobolev_poincare, zero_set_sweep
from doublephase.solver import SolveConfig, boundary_mask, energy, energy_gradient, minimize, node_grid
from doublephase.tasks import run_task
from doublephase.weights import Checkerboard, Combo, Constant, HoelderBump, Power, PowerClipped

LOCKS = Path(__file__).with_name("acceptance_locks.json")
RTOL = 1e-8


def locked(key: str, value: float, factor: float = 1.05) -> tuple[bool, str]:
    """Regression lock: the first run records ``value``; later runs must stay within ``factor`` of it."""
    data = json.loads(LOCKS.read_text()) if LOCKS.exists() else {}
    if key not in data:
        data[key] = value
        LOCKS.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        return True, f"{key} recorded {value:.6g}"
    ok = value <= factor * data[key]
    return ok, f"{key} {value:.6g} vs locked {data[key]:.6g}"


class FixtureRuns:
    """First run of every built-in fixture, shared by the criteria that read fixture results."""

    def __init__(self):
        self._runs = {}

    def get(self, name):
        if name not in self._runs:
            cfg = FIXTURES[name].load()
            t0 = time.perf_counter()
            result = run_task(cfg)
            seconds = time.perf_counter() - t0
            self._runs[name] = (dumps(build_payload(cfg, result)), result, seconds)
        return self._runs[name]


@pytest.fixture(scope="session")
def fixture_runs():
    return FixtureRuns()


# -- 1: pointwise and norm inequalities ------------------------------------------------

TRIALS = 10_000


def _exponent_pairs(rng, k):
    p = rng.uniform(1.05, 4.0, k)
    return p, p + rng.uniform(0.05, 4.0, k)


def _coefficients(rng, k):
    a = 10.0 ** rng.uniform(-6, 6, k)
    a[rng.random(k) < 0.1] = 0.0
    return a


def test_criterion_1_inequalities(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    groups = 50
    per = TRIALS // groups
    bad = dict.fromkeys(("sandwich", "doubling", "simonenko", "young", "unit_ball", "hoelder"), 0)
    P, Q = _exponent_pairs(rng, groups)
    for p, q in zip(P, Q):
        nf = NFunction(float(p), float(q))
        a = _coefficients(rng, per)
        t = 10.0 ** rng.uniform(-3, 3, per)
        s = 10.0 ** rng.uniform(-3, 3, per)
        f_t, f_st = nf.phi(a, t), nf.phi(a, s * t)
        lo, hi = np.minimum(s ** p, s ** q), np.maximum(s ** p, s ** q)
        bad["sandwich"] += int(np.sum((lo * f_t > f_st * (1 + RTOL)) | (f_st > hi * f_t * (1 + RTOL))))
        bad["doubling"] += int(np.sum(nf.phi(a, 2 * t) > 2 ** q * f_t * (1 + RTOL)))
        index = t * nf.dphi(a, t) / f_t
        bad["simonenko"] += int(np.sum((index < p * (1 - RTOL)) | (index > q * (1 + RTOL))))
        star = ConjugateNFunction(nf).phi(a, s)
        bad["young"] += int(np.sum(s * t > (f_t + star) * (1 + RTOL)))

    # unit ball and Hoelder on random step functions over a coefficient-carrying grid
    grid = Grid.box((0.0, 0.0), (1.0, 1.0), 8)
    models = [
        NFunction(2.0, 3.0, PowerClipped(0.5, (0.3, 0.6))),
        NFunction(1.5, 4.0, Checkerboard((0.0, 5.0), 0.25)),
        NFunction(3.0, 3.5, HoelderBump(0.5, ((0.5, 0.5),), (0.01,))),
        NFunction(1.2, 2.0, Constant(10.0)),
    ]
    per = TRIALS // len(models)
    ids = np.repeat(np.arange(per), grid.size)
    for nf in models:
        a = np.tile(nf.coefficient(grid).ravel(), per)
        scale = np.repeat(10.0 ** rng.uniform(-3, 3, per), grid.size)
        f = rng.normal(size=ids.size) * scale
        g = rng.normal(size=ids.size) * np.repeat(10.0 ** rng.uniform(-3, 3, per), grid.size)
        vol = grid.cell_volume
        nrm = luxemburg_batch(nf, a, f, ids, per, vol)
        rho_at_norm = np.bincount(ids, weights=nf.phi(a, np.abs(f) / nrm[ids]), minlength=per) * vol
        rho = np.bincount(ids, weights=nf.phi(a, np.abs(f)), minlength=per) * vol
        decided = np.abs(rho - 1.0) > RTOL
        bad["unit_ball"] += int(np.sum(np.abs(rho_at_norm - 1.0) > RTOL))
        bad["unit_ball"] += int(np.sum(decided & ((nrm <= 1.0) != (rho <= 1.0))))
        gnorm = luxemburg_batch(ConjugateNFunction(nf), a, g, ids, per, vol)
        pairing = np.bincount(ids, weights=np.abs(f * g), minlength=per) * vol
        bad["hoelder"] += int(np.sum(pairing > 2 * nrm * gnorm * (1 + RTOL)))
    elapsed = time.perf_counter() - t0
    record(1, "violations", not any(bad.values()), ", ".join(f"{k}={v}" for k, v in bad.items()))
    record(1, "runtime", elapsed < 30, f"{elapsed:.1f}s for 6 x {TRIALS} trials")
    assert not any(bad.values()), bad
    assert elapsed < 30


# -- 2: conjugate equivalence ---------------------------------------------------------

PAIRS = [(1.5, 2.0), (2.0, 3.0), (2.0, 6.0)]
COEFFS = np.array([0.0, 0.1, 1.0, 100.0])
S_NODES = np.geomspace(1e-3, 1e3, 40)


def test_criterion_2_conjugate_equivalence(record):
    t0 = time.perf_counter()
    constants, roundtrip = {}, {}
    for p, q in PAIRS:
        nf = NFunction(p, q)
        A, S = np.meshgrid(COEFFS, S_NODES)
        brute = conjugate_many(nf, A, S)
        closed = nf.conjugate(CLOSED_FORM).phi(A, S)
        ratio = brute / closed
        constants[(p, q)] = float(max(ratio.max(), 1 / ratio.min()))
        # second Legendre transform taken independently over a geometric s-grid
        star = ConjugateNFunction(nf)
        a_flat, t_flat = A.ravel(), S.ravel()
        back, _ = legendre_max(lambda s, rows: star.phi(a_flat[rows][:, None], s), t_flat)
        roundtrip[(p, q)] = float(np.max(np.abs(back / nf.phi(a_flat, t_flat) - 1)))
    elapsed = time.perf_counter() - t0
    # phi lies between max and sum of its two terms, so phi* sits in [2**-p'/q', 1] times the closed form
    bounds = {pq: 2 ** (pq[0] / (pq[0] - 1)) * pq[1] / (pq[1] - 1) for pq in PAIRS}
    in_bounds = all(constants[pq] <= bounds[pq] for pq in PAIRS)
    record(2, "ratio interval", in_bounds, ", ".join(f"C{pq}={constants[pq]:.3f}" for pq in PAIRS))
    worst = max(roundtrip.values())
    record(2, "round trip", worst <= 0.01, f"max rel error {worst:.2e}")
    record(2, "runtime", elapsed < 10, f"{elapsed:.1f}s")
    assert in_bounds and worst <= 0.01 and elapsed < 10


# -- 3: class-A anchor and duality ---------------------------------------------------


def _dyadic(D, n=1):
    g = Grid.box((-1.0,) * n, (1.0,) * n, 2 ** D)
    return g, CubeFamily.shifted_dyadic(g, D)


@pytest.mark.xfail(strict=True, reason=(
    "for phi = t^p/p one has ||1_Q||_phi = (|Q|/p)^(1/p) and ||1_Q||_phi* = (|Q|/p')^(1/p'), "
    "so the constant is p^(-1/p) p'^(-1/p'), the reciprocal of the stated p^(1/p) p'^(1/p'); "
    "see test_criterion_3_corrected_anchor"))
def test_criterion_3_stated_anchor(record):
    deviations = []
    for p in (1.5, 2.0, 3.0):
        g, fam = _dyadic(5)
        est = estimate_class_A(NFunction(p, p + 1), fam, g)
        pd = p / (p - 1)
        deviations.append(float(np.max(np.abs(est.per_cube / (p ** (1 / p) * pd ** (1 / pd)) - 1))))
    ok = max(deviations) <= 1e-6
    record(3, "stated anchor p^(1/p)p'^(1/p')", ok,
           f"max rel deviation {max(deviations):.3f}; the exact value is its reciprocal")
    assert ok


def test_criterion_3_corrected_anchor(record):
    worst = 0.0
    for p in (1.5, 2.0, 3.0):
        for n, D in ((1, 6), (2, 4)):
            g, fam = _dyadic(D, n)
            est = estimate_class_A(NFunction(p, p + 1), fam, g)
            pd = p / (p - 1)
            worst = max(worst, float(np.max(np.abs(est.per_cube / (p ** (-1 / p) * pd ** (-1 / pd)) - 1))))
    record(3, "corrected anchor p^(-1/p)p'^(-1/p')", worst <= 1e-6, f"max rel deviation {worst:.1e}")
    assert worst <= 1e-6


CATALOG_A = {
    "power_clipped": (2.0, 3.0, PowerClipped(0.5)),
    "unbounded": (2.0, 3.0, Power(-0.5)),
    "hoelder": (2.0, 2.5, HoelderBump(0.5, ((0.1,),))),
    "max_combo": (2.0, 3.0, Combo("max", PowerClipped(0.5), Checkerboard((1.0, 100.0), 0.25))),
    "sum_combo": (2.0, 3.0, Combo("sum", PowerClipped(0.5), Constant(0.3))),
}


def test_criterion_3_duality(record):
    g, fam = _dyadic(6)
    worst = 0.0
    for p, q, w in CATALOG_A.values():
        nf = NFunction(p, q, w)
        direct = estimate_class_A(nf, fam, g).constant
        dual = estimate_class_A(nf.conjugate(), fam, g, dual=nf.conjugate().conjugate()).constant
        worst = max(worst, abs(dual / direct - 1))
    record(3, "duality", worst <= 0.02, f"max |[phi*]/[phi] - 1| = {worst:.2e}")
    assert worst <= 0.02


# -- 4: Jensen verifier -------------------------------------------------------------


def test_criterion_4_jensen(record, fixture_runs):
    g, fam = _dyadic(6)
    dev = 0.0
    for p, q, w in CATALOG_A.values():
        rep = verify_jensen(NFunction(p, q, w), fam, g, TestFunctionGen(("constant",)))
        dev = max(dev, float(np.max(np.abs(rep.ratios - 1))))
    c1 = record(4, "constants", dev <= 1e-10, f"max |ratio - 1| = {dev:.1e}")

    _, res, _ = fixture_runs.get("example-Aq-weight")
    ceiling = {c["name"]: c for c in res.checks}["respects_Aq_ceiling"]
    c2 = record(4, "A_q ceiling", ceiling["passed"], f"worst ratio/ceiling {res.payload['aqCeilingRatio']:.4f}")

    _, res, _ = fixture_runs.get("jensen-outside-A-divergence")
    consts = [r["constant"] for r in res.payload["depths"]]
    c3 = record(4, "divergence", all(b > a for a, b in zip(consts, consts[1:])) and len(consts) >= 4,
                "constants " + ", ".join(f"{c:.3g}" for c in consts))
    assert c1 and c2 and c3


# -- 5: maximal operator ------------------------------------------------------------


def exhaustive_maximal(v):
    """Max over every interval containing each cell; prefix sums are exact on integer data."""
    N = v.size
    csum = np.concatenate([[0.0], np.cumsum(v)])
    out = np.zeros(N)
    for L in range(1, N + 1):
        avg = (csum[L:] - csum[:-L]) / L
        for off in range(L):
            out[off:off + avg.size] = np.maximum(out[off:off + avg.size], avg)
    return out


def test_criterion_5_maximal(record):
    rng = np.random.default_rng(5)
    mismatched = []
    for N in range(1, 129):
        g = Grid.box((0.0,), (1.0,), N)
        v = rng.integers(-1000, 1000, N).astype(float)
        if not np.array_equal(hl_maximal(GridField(g, v)).values, exhaustive_maximal(np.abs(v))):
            mismatched.append(N)
    c1 = record(5, "HL exact", not mismatched, f"N = 1..128, mismatches {mismatched}")

    cz_bad = dom_bad = 0
    grids = [Grid.box((0.0,), (1.0,), 128), Grid.box((0.0, 0.0), (1.0, 1.0), 16)]
    for seed in range(100):
        g = grids[seed % 2]
        f = GridField(g, np.exp(2 * np.random.default_rng(seed).normal(size=g.dims)))
        cz_bad += not cz_decompose(f).check(g)["passed"]
        dom_bad += not shifted_domination_check(f).passed
    c2 = record(5, "CZ invariants", cz_bad == 0, f"{cz_bad}/100 fields violate")
    c3 = record(5, "shifted domination", dom_bad == 0, f"{dom_bad}/100 fields violate")
    assert c1 and c2 and c3


# -- 6: modular boundedness ---------------------------------------------------------


def test_criterion_6_boundedness(record, fixture_runs):
    g = Grid.box((-1.0,), (1.0,), 256)
    ok, notes = True, []
    for name, (p, q, w) in CATALOG_A.items():
        for variant in ("primal", "dual"):
            rep = verify_modular_boundedness(NFunction(p, q, w), g, variant=variant, count=200, seed=0,
                                             threads=None)
            finite = rep.passed and math.isfinite(rep.modular_constant)
            held, note = locked(f"boundedness/{name}/{variant}", rep.modular_constant)
            ok &= finite and held
            notes.append(note)
    _, res, _ = fixture_runs.get("maximal-bounded-catalog")
    for variant in ("primal", "dual"):
        c = res.payload[f"boundedness_{variant}"]["modularConstant"]
        held, note = locked(f"boundedness/fixture/{variant}", c)
        ok &= held and res.passed
        notes.append(note)
    record(6, "finite and locked", ok, "; ".join(n for n in notes if "dual" in n or "fixture" in n))
    assert ok, notes


# -- 7: Sobolev-Poincare ------------------------------------------------------------

QUADRATIC = NFunction(2, 3)


def test_criterion_7_poincare(record):
    g = Grid.box((0.0, 0.0), (1.0, 1.0), 64)
    nf = NFunction(2, 3, PowerClipped(0.5, center=(0.5, 0.5)))
    reps = random_bump_trials(nf, g, 100, seed=0, s=1.2)
    dominated = sum(r.lhs_mean <= r.lhs * (1 + 1e-12) for r in reps)
    c1 = record(7, "mean dominance", dominated == len(reps), f"{dominated}/{len(reps)} trials")

    worst = 0.0
    for N in (64, 128, 256):
        line = Grid.box((-1.0,), (1.0,), N)
        for s in (1.5, 3.0):
            r = verify_sobolev_poincare(QUADRATIC, GridField(line, line.centers()[0]), ball(line, (0.0,), 1.0), s)
            exact = (1 / (2 * s + 1)) ** (1 / s)
            worst = max(worst, abs(r.ratio / exact - 1) / line.h ** 2)
    c2 = record(7, "analytic oracle", worst <= 1.0, f"max |ratio/exact - 1| / h^2 = {worst:.3f}")

    line = Grid.box((-1.0,), (1.0,), 1000)
    B = ball(line, (0.0,), 1.0)
    trend = []
    for model in (QUADRATIC, NFunction(2, 3, PowerClipped(0.5))):
        sweep = zero_set_sweep(model, B, (0.5, 0.25, 0.1), s=1.5)
        for a, b in zip(sweep, sweep[1:]):
            trend.append((b.raw_ratio / a.raw_ratio) / (b.allowance / a.allowance))
    c3 = record(7, "zero-set trend", max(trend) <= 2.0, f"max growth/allowance growth {max(trend):.3f}")
    assert c1 and c2 and c3


# -- 8: solver sanity ---------------------------------------------------------------


def _errors(fixture_runs, name):
    _, res, seconds = fixture_runs.get(name)
    return res, [r["maxError"] for r in res.payload["runs"]], seconds


def test_criterion_8_linear_and_log(record, fixture_runs):
    t0 = time.perf_counter()
    res, errs, sec1 = _errors(fixture_runs, "pde-harmonic-sanity")
    c1 = record(8, "x1 reproduced", max(errs) <= 1e-12, f"max error {max(errs):.1e}")

    res2, errs2, sec2 = _errors(fixture_runs, "pde-harmonic-quadratic-order")
    monotone = True
    for r in (res, res2):
        for sol in r.solutions.values():
            for prev, cur in zip(sol.log, sol.log[1:]):
                if prev["eps"] == cur["eps"]:
                    monotone &= cur["energy"] <= prev["energy"] and cur["decrease"] > 0
    c2 = record(8, "energy log", monotone, "non-increasing within every continuation level")

    g = node_grid((0.0, 0.0), (1.0, 1.0), 32)
    X, Y = g.centers()
    rng = np.random.default_rng(8)
    worst = 0.0
    for nf in (NFunction(2, 3), NFunction(2, 3, PowerClipped(0.5, center=(0.5, 0.5)))):
        cfg = SolveConfig(nf, GridField(g, np.sin(3 * X) * Y))
        inner = ~boundary_mask(g)
        v = cfg.start()
        v[inner] += rng.normal(size=inner.sum())
        G = energy_gradient(cfg, GridField(g, v), eps=1e-3)
        for _ in range(3):
            d = np.zeros(g.dims)
            d[inner] = rng.normal(size=inner.sum())
            t = 1e-6
            fd = (energy(cfg, GridField(g, v + t * d), 1e-3) - energy(cfg, GridField(g, v - t * d), 1e-3)) / (2 * t)
            worst = max(worst, abs(fd - np.sum(G * d)) / abs(fd))
    c3 = record(8, "gradient vs FD", worst <= 1e-5, f"max rel {worst:.1e}")
    elapsed = time.perf_counter() - t0 + sec1 + sec2
    c4 = record(8, "runtime", elapsed < 180, f"{elapsed:.1f}s")
    assert c1 and c2 and c3 and c4


@pytest.mark.xfail(strict=True, reason=(
    "x1^2 - x2^2 is discretely harmonic for the P1 energy (equal to the 5-point Laplacian), so the "
    "minimiser reproduces it up to the regularisation floor and the error does not scale with h; "
    "the fitted slope is ~0, not 2; see test_criterion_8_order_on_non_polynomial_data"))
def test_criterion_8_quadratic_slope(record, fixture_runs):
    res, errs, _ = _errors(fixture_runs, "pde-harmonic-quadratic-order")
    slope = res.payload["slope"]
    ok = slope is not None and abs(slope - 2.0) <= 0.2
    record(8, "x1^2-x2^2 slope 2 +- 0.2", ok,
           f"slope {slope:.3f}, errors " + ", ".join(f"{e:.1e}" for e in errs) + " (exact up to the eps floor)")
    assert ok


def test_criterion_8_order_on_non_polynomial_data(record, fixture_runs):
    _, errs, _ = _errors(fixture_runs, "pde-harmonic-quadratic-order")
    tiny = max(errs) <= 1e-8
    hs, es = [], []
    for N in (32, 64, 128):
        g = node_grid((0.0, 0.0), (1.0, 1.0), N)
        X, Y = g.centers()
        exact = np.exp(X) * np.sin(Y)
        sol = minimize(SolveConfig(QUADRATIC, GridField(g, exact)))
        hs.append(g.h)
        es.append(float(np.max(np.abs(sol.u.values - exact))))
    slope = float(np.polyfit(np.log(hs), np.log(es), 1)[0])
    ok = tiny and abs(slope - 2.0) <= 0.2
    record(8, "companion: exp(x1)sin(x2) order", ok, f"slope {slope:.3f}; x1^2-x2^2 error {max(errs):.1e}")
    assert ok


# -- 9: regularity diagnostics ------------------------------------------------------

REGULARITY = ("regularity-power-clipped", "regularity-hoelder-bump")


@pytest.mark.parametrize("name", REGULARITY)
def test_criterion_9_regularity(record, fixture_runs, name):
    _, res, seconds = fixture_runs.get(name)
    checks = {c["name"]: c for c in res.checks}
    holder = res.payload["holder"]
    diag = all(checks[k]["passed"] for k in ("converged", "levels_resolved", "theta_below", "beta_above", "fit_r2"))
    c1 = record(9, f"{name} decay", diag,
                f"theta max {max(holder['theta']):.3f}, beta {holder['beta']:.3f}, R2 {holder['r2']:.3f}")
    notes, held = [], True
    for key in ("caccioppoliConstant", "linftyConstant"):
        value = res.payload[key]
        ok, note = locked(f"regularity/{name}/{key}", value)
        held &= value is not None and math.isfinite(value) and ok
        notes.append(note)
    c2 = record(9, f"{name} constants", held, "; ".join(notes))
    c3 = record(9, f"{name} runtime", seconds < 600, f"{seconds:.0f}s")
    assert c1 and c2 and c3


# -- 10: determinism ----------------------------------------------------------------


@pytest.mark.parametrize("name", list(FIXTURES))
def test_criterion_10_determinism(record, fixture_runs, name):
    first, _, _ = fixture_runs.get(name)
    cfg = FIXTURES[name].load()
    again = dumps(build_payload(cfg, run_task(cfg, threads=1)))
    same = first == again
    record(10, name, same, f"{len(first)} bytes identical" if same else "payload bytes differ")
    assert same
