"""Class-A estimates and empirical Jensen-type inequalities over cube families.

Every verifier works on the (cube, cell) incidence of a family so that all
cubes are processed in one vectorised pass per test function.  Test functions
live on the cube they are tested on and are normalised to unit Luxemburg norm
there, which is the hardest case of the ``||f|| <= 1`` hypothesis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cubes import Cube, CubeFamily, Incidence
from .errors import InputError, PreconditionError
from .fields import luxemburg_batch
from .grid import Grid
from .parallel import ordered_map

__all__ = [
    "describe_model",
    "ClassAEstimate",
    "estimate_class_A",
    "TestFunctionGen",
    "JensenReport",
    "verify_jensen",
    "verify_improved_jensen",
    "verify_left_open",
    "sweep_exponent",
    "ReverseHoelderReport",
    "verify_reverse_hoelder",
    "indicator_norms",
]


def describe_model(model) -> dict:
    desc = getattr(model, "describe", None)
    d = desc() if desc else {"of": model.base.describe()}
    return {"name": model.name, "lower": model.lower, "upper": model.upper, **d}


def _pair_coefficients(model, grid: Grid, inc: Incidence) -> np.ndarray:
    return np.asarray(model.coefficient(grid), float).ravel()[inc.cells]


def indicator_norms(model, grid: Grid, inc: Incidence) -> np.ndarray:
    """``||1_Q||`` for every cube of an incidence."""
    a = _pair_coefficients(model, grid, inc)
    return luxemburg_batch(model, a, np.ones(a.size), inc.cube_ids, inc.n_cubes, grid.cell_volume)


# -- class A ---------------------------------------------------------------------


@dataclass(frozen=True)
class ClassAEstimate:
    constant: float
    per_cube: np.ndarray = field(repr=False)
    family: CubeFamily = field(repr=False)

    @property
    def argmax(self) -> Cube:
        return self.family.cubes[int(np.argmax(self.per_cube))]

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "cubeFamily": self.family.describe(),
            "worstCube": self.argmax.to_dict(),
        }


def estimate_class_A(model, cubes: CubeFamily, grid: Grid, dual=None) -> ClassAEstimate:
    """``max_Q ||1_Q||_phi ||1_Q||_dual / |Q|`` with ``dual`` the brute-force conjugate by default."""
    inc = cubes.incidence(grid)
    dual = model.conjugate() if dual is None else dual
    measure = inc.counts * grid.cell_volume
    prod = indicator_norms(model, grid, inc) * indicator_norms(dual, grid, inc) / measure
    return ClassAEstimate(float(np.max(prod)), prod, cubes)


# -- test functions ----------------------------------------------------------------

DEFAULT_KINDS = (
    "constant",
    "subcubes",
    "top_half",
    "bottom_half",
    "dual_profile",
    "bump_max",
    "bump_min",
    "random_steps",
)


@dataclass(frozen=True)
class TestFunctionGen:
    """Families of non-negative test functions restricted to each cube.

    ``constant`` is 1; ``subcubes`` are the indicators of the ``2**n``
    children; ``top_half``/``bottom_half`` indicate where the coefficient is
    above/below its median on the cube; ``dual_profile`` is
    ``(a + delta)**(-1/(q-1))``; ``bump_max``/``bump_min`` are cones centred
    at the coefficient's extrema; ``random_steps`` are seeded piecewise
    constants on dyadic blocks of the grid.
    """

    __test__ = False  # not a pytest class

    kinds: tuple[str, ...] = DEFAULT_KINDS
    seed: int = 0
    random_count: int = 4

    def __post_init__(self):
        unknown = set(self.kinds) - set(DEFAULT_KINDS)
        if unknown:
            raise InputError(f"unknown test-function kinds {sorted(unknown)}")

    def generate(self, model, grid: Grid, cubes: CubeFamily, inc: Incidence):
        """Yield ``(name, values)`` with one value per incidence pair."""
        a = _pair_coefficients(model, grid, inc)
        pts = grid.points()[inc.cells]
        corners = np.array([c.corner for c in cubes.cubes])[inc.cube_ids]
        sides = np.array([c.side for c in cubes.cubes])[inc.cube_ids]
        out = []
        for kind in self.kinds:
            if kind == "constant":
                out.append(("constant", np.ones(a.size)))
            elif kind == "subcubes":
                half = np.floor((pts - corners) / (sides[:, None] / 2)).clip(0, 1).astype(int)
                child = half @ (2 ** np.arange(grid.n))
                for i in range(2 ** grid.n):
                    out.append((f"subcube_{i}", (child == i).astype(float)))
            elif kind in ("top_half", "bottom_half"):
                med = _per_cube_median(a, inc)
                sel = a >= med if kind == "top_half" else a <= med
                out.append((kind, sel.astype(float)))
            elif kind == "dual_profile":
                q = model.upper
                mean = inc.mean(a)[inc.cube_ids]
                delta = 1e-6 * mean + 1e-12
                out.append((kind, (a + delta) ** (-1.0 / (q - 1.0))))
            elif kind in ("bump_max", "bump_min"):
                key = a if kind == "bump_max" else -a
                centre = pts[_per_cube_argmax(key, inc)][inc.cube_ids]
                r = np.linalg.norm(pts - centre, axis=1)
                out.append((kind, np.maximum(1.0 - r / (sides / 2), 0.0)))
            elif kind == "random_steps":
                for j in range(self.random_count):
                    out.append((f"random_steps_{j}", _random_steps(grid, self.seed, j).ravel()[inc.cells]))
        return out


def _per_cube_median(v, inc):
    order = np.lexsort((v, inc.cube_ids))
    sv = v[order]
    off = inc.offsets
    lo = off[:-1] + (inc.counts - 1) // 2
    hi = off[:-1] + inc.counts // 2
    return (0.5 * (sv[lo] + sv[hi]))[inc.cube_ids]


def _per_cube_argmax(v, inc):
    order = np.lexsort((-v, inc.cube_ids))
    return order[inc.offsets[:-1]]


def _random_steps(grid: Grid, seed: int, j: int) -> np.ndarray:
    rng = np.random.default_rng([seed, j])
    N = min(grid.dims)
    levels = max(int(np.log2(N)), 1)
    block = max(N >> int(rng.integers(1, levels + 1)), 1)
    coarse = [-(-d // block) for d in grid.dims]
    vals = np.exp(2.0 * rng.normal(size=coarse))
    for axis in range(grid.n):
        vals = np.repeat(vals, block, axis=axis)
    return vals[tuple(slice(0, d) for d in grid.dims)]


# -- Jensen-type verifiers ---------------------------------------------------------------


@dataclass
class JensenReport:
    model: dict
    family: CubeFamily
    ratios: np.ndarray
    witnesses: list[str]
    skipped: int
    ceiling: float | None = None
    label: str = "jensen"
    extra: dict = field(default_factory=dict)

    @property
    def constant(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def passed(self) -> bool:
        c = self.constant
        return bool(np.isfinite(c) and (self.ceiling is None or c <= self.ceiling))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "cubeFamily": self.family.describe(),
            "perCube": [
                {"cube": c.to_dict(), "ratio": float(r), "witness": w}
                for c, r, w in zip(self.family.cubes, self.ratios, self.witnesses)
            ],
            "constant": self.constant,
            "passed": self.passed,
            "skipped": self.skipped,
            "check": self.label,
            **self.extra,
        }


def _run_ratio(model, cubes, grid, gen, ratio_fn, label, ceiling, threads, extra=None):
    gen = gen or TestFunctionGen()
    inc = cubes.incidence(grid)
    a = _pair_coefficients(model, grid, inc)
    vol = grid.cell_volume
    funcs = gen.generate(model, grid, cubes, inc)

    def one(item):
        name, v = item
        norms = luxemburg_batch(model, a, v, inc.cube_ids, inc.n_cubes, vol)
        live = norms > 0
        f = np.abs(v) / np.where(live, norms, 1.0)[inc.cube_ids]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = ratio_fn(model, a, f, inc)
        r = np.where(live & np.isfinite(r), r, -np.inf)
        return r, int(np.count_nonzero(~live))

    results = ordered_map(one, funcs, threads)
    stack = np.stack([r for r, _ in results])
    best = np.argmax(stack, axis=0)
    ratios = stack[best, np.arange(inc.n_cubes)]
    witnesses = [funcs[i][0] for i in best]
    skipped = sum(s for _, s in results)
    ratios = np.where(np.isfinite(ratios), ratios, 0.0)
    return JensenReport(describe_model(model), cubes, ratios, witnesses, skipped, ceiling, label, extra or {})


def _jensen_ratio(model, a, f, inc):
    avg = inc.mean(f)[inc.cube_ids]
    return inc.sum(model.phi(a, avg)) / inc.sum(model.phi(a, f))


def verify_jensen(model, cubes: CubeFamily, grid: Grid, gen: TestFunctionGen | None = None, *,
                  ceiling: float | None = None, threads: int | None = 1) -> JensenReport:
    """Max over cubes and test functions of ``int_Q phi(x, avg_Q |f|) / int_Q phi(x, |f|)``.

    Passing the conjugate model checks the same inequality for ``phi*``.
    """
    return _run_ratio(model, cubes, grid, gen, _jensen_ratio, "jensen", ceiling, threads)


def verify_improved_jensen(model, cubes: CubeFamily, grid: Grid, s: float, gen: TestFunctionGen | None = None,
                           *, ceiling: float | None = None, threads: int | None = 1) -> JensenReport:
    """Ratio ``(avg_Q phi(., avg_Q|f|)**s)**(1/s) / avg_Q phi(., |f|)``."""
    if not s >= 1:
        raise InputError("exponent s must be >= 1")

    def ratio(model, a, f, inc):
        avg = inc.mean(f)[inc.cube_ids]
        return inc.mean(model.phi(a, avg) ** s) ** (1.0 / s) / inc.mean(model.phi(a, f))

    return _run_ratio(model, cubes, grid, gen, ratio, "improved_jensen", ceiling, threads, {"s": s})


def verify_left_open(model, cubes: CubeFamily, grid: Grid, s: float, gen: TestFunctionGen | None = None,
                     *, ceiling: float | None = None, threads: int | None = 1) -> JensenReport:
    """Ratio ``avg_Q phi(., (avg_Q |f|**s)**(1/s)) / avg_Q phi(., |f|)``."""
    if not s >= 1:
        raise InputError("exponent s must be >= 1")

    def ratio(model, a, f, inc):
        mean_s = inc.mean(f ** s)[inc.cube_ids] ** (1.0 / s)
        return inc.mean(model.phi(a, mean_s)) / inc.mean(model.phi(a, f))

    return _run_ratio(model, cubes, grid, gen, ratio, "left_open", ceiling, threads, {"s": s})


def sweep_exponent(verifier, model, cubes, grid, s_values, gen=None, *, ceiling: float, threads=1) -> dict:
    """Run ``verifier`` over ``s_values``; report constants and the largest ``s`` within ``ceiling``."""
    rows = []
    for s in s_values:
        rep = verifier(model, cubes, grid, s, gen, ceiling=ceiling, threads=threads)
        rows.append({"s": float(s), "constant": rep.constant, "passed": rep.passed})
    ok = [r["s"] for r in rows if r["passed"]]
    return {"rows": rows, "ceiling": ceiling, "largestAdmissible": max(ok) if ok else None}


# -- reverse Hoelder ------------------------------------------------------------------------

EPS_LADDER = (0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0)


@dataclass
class ReverseHoelderReport:
    cube: Cube
    t_max: float
    t_values: np.ndarray
    constants: dict[float, float]
    ceiling: float

    @property
    def eps_star(self) -> float:
        ok = [e for e, c in self.constants.items() if c <= self.ceiling]
        return max(ok) if ok else 0.0

    @property
    def constant(self) -> float:
        e = self.eps_star
        return self.constants[e] if e else float("nan")

    def to_dict(self) -> dict:
        return {
            "cube": self.cube.to_dict(),
            "tMax": self.t_max,
            "t": self.t_values.tolist(),
            "constants": {str(e): c for e, c in self.constants.items()},
            "ceiling": self.ceiling,
            "epsStar": self.eps_star,
        }


def verify_reverse_hoelder(model, cube: Cube, grid: Grid, t_values=None, *, eps_ladder=EPS_LADDER,
                           ceiling: float = 2.0) -> ReverseHoelderReport:
    """Largest ``eps`` with ``(avg phi(., t)**(1+eps))**(1/(1+eps)) <= C avg phi(., t)``, ``C <= ceiling``.

    Admissible levels are ``0 < t <= 1 / ||1_Q||``; the default ladder spans
    three decades below that bound.
    """
    fam = CubeFamily([cube])
    inc = fam.incidence(grid)
    t_max = 1.0 / float(indicator_norms(model, grid, inc)[0])
    if t_values is None:
        t_values = t_max * np.geomspace(1e-3, 1.0, 13)
    t_values = np.asarray(t_values, float)
    if np.any(t_values <= 0) or np.any(t_values > t_max * (1 + 1e-12)):
        raise PreconditionError(f"levels must lie in (0, 1/||1_Q||] = (0, {t_max:.6g}]")
    a = _pair_coefficients(model, grid, inc)
    phi = model.phi(a[None, :], t_values[:, None])
    base = phi.mean(axis=1)
    consts = {}
    for e in eps_ladder:
        high = np.mean(phi ** (1.0 + e), axis=1) ** (1.0 / (1.0 + e))
        consts[float(e)] = float(np.max(high / base))
    return ReverseHoelderReport(cube, t_max, t_values, consts, ceiling)
