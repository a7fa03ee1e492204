"""Hardy-Littlewood and dyadic maximal functions, shifted-grid domination and CZ cubes.

Dyadic computations work in integer cell units on square grids.  Dyadic
maximal functions extend ``f`` by zero outside the box, so shifted cubes that
stick out of the box (and the box's own ancestors) are legitimate cubes with
smaller averages.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from .cubes import CubeFamily, grid_shifts, shift_offset
from .errors import DomainError, InputError
from .fields import luxemburg_norm, modular
from .grid import Grid, GridField
from .nfunc import PowerComposed
from .parallel import ordered_map

__all__ = [
    "hl_maximal",
    "dyadic_maximal",
    "enclosing_shifted_cube",
    "DominationReport",
    "shifted_domination_check",
    "CZCube",
    "CZDecomposition",
    "cz_decompose",
    "BoundednessReport",
    "verify_modular_boundedness",
    "seeded_test_functions",
    "spike_family_ratios",
]


def _square_cells(grid: Grid) -> int:
    if len(set(grid.dims)) != 1:
        raise DomainError("dyadic operators need a square grid")
    return grid.dims[0]


# -- Hardy-Littlewood -----------------------------------------------------------------


def _window_sums(v: np.ndarray, s: int, axis: int) -> np.ndarray:
    c = np.cumsum(v, axis=axis)
    c = np.concatenate([np.zeros_like(np.take(c, [0], axis=axis)), c], axis=axis)
    n = v.shape[axis]
    return np.take(c, np.arange(s, n + 1), axis=axis) - np.take(c, np.arange(0, n - s + 1), axis=axis)


def _spread_max(starts: np.ndarray, s: int, axis: int) -> np.ndarray:
    """Per cell ``x``, the max over window starts ``x - s + 1 .. x`` along ``axis``."""
    pad = [(0, 0)] * starts.ndim
    pad[axis] = (0, s - 1)
    padded = np.pad(starts, pad, constant_values=-np.inf)
    # origin (s-1)//2 turns the centred filter into a trailing window of length s
    return maximum_filter1d(padded, size=s, axis=axis, origin=(s - 1) // 2, mode="constant", cval=-np.inf)


def hl_maximal(f: GridField, cubes: CubeFamily | None = None) -> GridField:
    """``max`` of ``avg_Q |f|`` over cubes ``Q`` containing each cell.

    Without a family, ``Q`` ranges over every grid-aligned cube inside the box
    (side 1 to the shortest box side); with one, over the family plus all
    single cells, so ``Mf >= |f|`` always.
    """
    v = np.abs(f.values)
    if cubes is not None:
        inc = cubes.incidence(f.grid)
        avg = inc.mean(v.ravel()[inc.cells])
        out = v.ravel().copy()
        np.maximum.at(out, inc.cells, avg[inc.cube_ids])
        return f.with_values(out)
    out = v.copy()
    for s in range(2, min(f.grid.dims) + 1):
        sums = v
        for axis in range(v.ndim):
            sums = _window_sums(sums, s, axis)
        avg = sums / s ** v.ndim
        for axis in range(v.ndim):
            avg = _spread_max(avg, s, axis)
        np.maximum(out, avg, out=out)
    return f.with_values(out)


# -- dyadic ----------------------------------------------------------------------------


def _levels(N: int) -> int:
    return int(np.ceil(np.log2(N))) + 3


def _dyadic_index(N: int, t: int, j: int) -> np.ndarray:
    """Cube index along one axis of every cell at side ``2**j`` in shifted grid ``t``."""
    return (np.arange(N) - shift_offset(t, j)) // (2 ** j)


def dyadic_maximal(f: GridField, shift: tuple[int, ...] | None = None, max_level: int | None = None) -> GridField:
    """Dyadic maximal function of one shifted grid (``shift=None`` is the standard grid).

    Levels run from single cells up to the first level whose cube contains the
    whole box (capped at ``max_level``); the O(N log N) pass takes per-level
    bincount sums.
    """
    N = _square_cells(f.grid)
    n = f.grid.n
    shift = (0,) * n if shift is None else tuple(shift)
    v = np.abs(f.values)
    out = v.copy()
    top = _levels(N) if max_level is None else max_level
    for j in range(1, top + 1):
        idx = [_dyadic_index(N, t, j) for t in shift]
        span = [i[-1] - i[0] + 1 for i in idx]
        mesh = np.meshgrid(*[i - i[0] for i in idx], indexing="ij")
        flat = np.ravel_multi_index(mesh, span).ravel()
        sums = np.bincount(flat, weights=v.ravel(), minlength=int(np.prod(span)))
        avg = (sums / (2 ** j) ** n)[flat].reshape(v.shape)
        np.maximum(out, avg, out=out)
        if all(s == 1 for s in span):
            break
    return f.with_values(out)


def enclosing_shifted_cube(corner_cells: tuple[int, ...], side_cells: int, max_level: int = 64):
    """Smallest cube of any shifted grid containing ``[corner, corner + side)`` (integer cells).

    Returns ``(shift, level, index, side)``; the side is at most ``6 * side``.
    """
    best = None
    for shift in grid_shifts(len(corner_cells)):
        for j in range(max_level):
            size = 2 ** j
            if best is not None and size >= best[3]:
                break
            if size < side_cells:
                continue
            ok, index = True, []
            for t, c in zip(shift, corner_cells):
                off = shift_offset(t, j)
                m = (c - off) // size
                if m * size + off + size < c + side_cells:
                    ok = False
                    break
                index.append(m)
            if ok:
                best = (shift, j, tuple(index), size)
                break
    return best


@dataclass
class DominationReport:
    cells_checked: int
    pointwise_violations: int
    worst_pointwise_ratio: float
    cubes_checked: int
    lemma_violations: int
    worst_cover_ratio: float  # max |Q_alpha| / |Q|

    @property
    def passed(self) -> bool:
        return self.pointwise_violations == 0 and self.lemma_violations == 0

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def shifted_domination_check(f: GridField, cubes: CubeFamily | None = None, rtol: float = 1e-12) -> DominationReport:
    """``Mf <= 6**n sum_alpha M^alpha f`` on every cell, plus the covering lemma on every aligned cube.

    Without an explicit family the covering lemma is checked for every
    grid-aligned cube in the box, which is the family behind :func:`hl_maximal`.
    """
    g = f.grid
    N = _square_cells(g)
    n = g.n
    M = hl_maximal(f, cubes).values
    total = sum(dyadic_maximal(f, s).values for s in grid_shifts(n))
    bound = 6 ** n * total
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(M > 0, M / np.where(bound > 0, bound, np.inf), 0.0)
    viol = int(np.count_nonzero(M > bound * (1 + rtol)))
    # covering lemma: measure ratio |Q_alpha| / |Q| for every aligned cube
    worst, bad, count = 0.0, 0, 0
    if cubes is None:
        for side in range(1, N + 1):
            for corner in itertools.product(range(N - side + 1), repeat=n):
                hit = enclosing_shifted_cube(corner, side)
                r = (hit[3] / side) ** n
                worst, bad = max(worst, r), bad + (r > 6 ** n)
                count += 1
    else:
        for c in cubes:
            corner = tuple(int(round((x - o) / g.h)) for x, o in zip(c.corner, g.origin))
            side = int(round(c.side / g.h))
            hit = enclosing_shifted_cube(corner, side)
            r = (hit[3] / side) ** n
            worst, bad = max(worst, r), bad + (r > 6 ** n)
            count += 1
    return DominationReport(g.size, viol, float(ratio.max()), count, bad, worst)


# -- Calderon-Zygmund ------------------------------------------------------------------


@dataclass(frozen=True)
class CZCube:
    level: int
    index: tuple[int, ...]
    avg: float
    cells: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"level": self.level, "index": list(self.index), "avg": self.avg}


@dataclass
class CZDecomposition:
    gamma: float
    n: int
    levels: dict[int, list[CZCube]]
    omega: dict[int, np.ndarray] = field(repr=False)

    def to_json(self) -> list:
        return [{"k": k, "cubes": [c.to_dict() for c in cubes]} for k, cubes in sorted(self.levels.items())]

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    def check(self, grid: Grid, rtol: float = 1e-12) -> dict:
        """Averages in ``(gamma**k, 2**n gamma**k]``, disjointness, exact cover of each level set, sparsity."""
        bad_avg = bad_disjoint = bad_cover = bad_sparse = 0
        checked = 0
        for k, cubes in self.levels.items():
            lvl = self.gamma ** k
            cover = np.zeros(grid.size, int)
            for c in cubes:
                checked += 1
                if not (c.avg > lvl and c.avg <= 2 ** self.n * lvl * (1 + rtol)):
                    bad_avg += 1
                cover[c.cells] += 1
                for m in (1, 2, 3):
                    om = self.omega.get(k + m)
                    if om is None:
                        continue
                    meas = np.count_nonzero(om[c.cells])
                    if meas > 2 ** self.n * self.gamma ** (-m) * _cube_cells(c.level, grid) * (1 + rtol):
                        bad_sparse += 1
            bad_disjoint += int(np.count_nonzero(cover > 1))
            bad_cover += int(np.count_nonzero((cover > 0) != self.omega[k]))
        return {
            "cubes": checked,
            "averageViolations": bad_avg,
            "overlapCells": bad_disjoint,
            "coverMismatchCells": bad_cover,
            "sparsityViolations": bad_sparse,
            "passed": bad_avg == bad_disjoint == bad_cover == bad_sparse == 0,
        }


def _cube_cells(level: int, grid: Grid) -> float:
    """Number of grid cells a level-``level`` cube would hold (levels < 0 exceed the box)."""
    N = grid.dims[0]
    return (N / 2 ** level) ** grid.n


def cz_decompose(f: GridField, gamma: float = 2.0, k_range=None) -> CZDecomposition:
    """Maximal dyadic cubes of ``{M^D f > gamma**k}`` for each ``k``, chosen top-down.

    The box is the level-0 cube; when its average already exceeds
    ``gamma**k`` the selected cube is the largest ancestor of the box (level
    ``-m``, ``f`` extended by zero) whose average still does.
    """
    if not gamma > 1:
        raise InputError("gamma must exceed 1")
    g = f.grid
    N = _square_cells(g)
    D = int(round(np.log2(N)))
    if 2 ** D != N:
        raise DomainError("CZ decomposition needs 2**D cells per axis")
    n = g.n
    v = np.abs(f.values)
    # averages per level: level l has 2**l cubes per axis
    avgs = []
    for lvl in range(D + 1):
        b = N >> lvl
        shape = []
        for _ in range(n):
            shape += [2 ** lvl, b]
        blocks = v.reshape(shape)
        avgs.append(blocks.mean(axis=tuple(range(1, 2 * n, 2))))
    mdf = dyadic_maximal(f).values
    box_avg = float(avgs[0].ravel()[0])
    if k_range is None:
        pos = mdf[mdf > 0]
        if pos.size == 0:
            return CZDecomposition(gamma, n, {}, {})
        k_lo = int(np.floor(np.log(pos.min()) / np.log(gamma))) - 1
        k_hi = int(np.ceil(np.log(pos.max()) / np.log(gamma)))
        k_range = range(k_lo, k_hi + 1)
    levels, omega = {}, {}
    cell_idx = np.arange(g.size).reshape(g.dims)
    for k in k_range:
        lvl_val = gamma ** k
        om = (mdf > lvl_val).ravel()
        if not om.any():
            continue
        omega[k] = om
        found = []
        if box_avg > lvl_val:
            m = 0
            while box_avg / 2 ** (n * (m + 1)) > lvl_val:
                m += 1
            found.append(CZCube(-m, (0,) * n, box_avg / 2 ** (n * m), cell_idx.ravel()))
        else:
            taken = np.zeros(g.dims, bool)
            for lvl in range(1, D + 1):
                b = N >> lvl
                hits = np.argwhere(avgs[lvl] > lvl_val)
                for ind in hits:
                    sl = tuple(slice(i * b, (i + 1) * b) for i in ind)
                    if taken[sl].any():
                        continue
                    taken[sl] = True
                    found.append(CZCube(lvl, tuple(int(i) for i in ind), float(avgs[lvl][tuple(ind)]),
                                        cell_idx[sl].ravel()))
        levels[k] = found
    return CZDecomposition(gamma, n, levels, omega)


# -- boundedness on the Musielak-Orlicz space ---------------------------------------------


def seeded_test_functions(grid: Grid, count: int, seed: int) -> list[tuple[str, np.ndarray]]:
    """Seeded mix of spikes, cube indicators, bumps, dyadic steps and log-normal noise."""
    out = []
    pts = grid.centers()
    lo = np.asarray(grid.origin)
    size = np.asarray(grid.upper) - lo
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        kind = ("spike", "indicator", "bump", "steps", "noise")[i % 5]
        if kind == "spike":
            idx = tuple(int(rng.integers(0, d)) for d in grid.dims)
            v = np.zeros(grid.dims)
            v[idx] = 1.0
        elif kind == "indicator":
            side = rng.uniform(0.02, 0.5) * size.min()
            c = lo + rng.random(grid.n) * size
            v = np.ones(grid.dims)
            for x, ci in zip(pts, c):
                v = v * (np.abs(x - ci) < side / 2)
            if not v.any():
                v.ravel()[int(rng.integers(0, grid.size))] = 1.0
        elif kind == "bump":
            c = lo + rng.random(grid.n) * size
            r = rng.uniform(0.02, 0.4) * size.min()
            dist = np.sqrt(sum((x - ci) ** 2 for x, ci in zip(pts, c)))
            v = np.maximum(1 - dist / r, 0.0) ** rng.uniform(0.5, 3.0)
            if not v.any():
                v.ravel()[int(rng.integers(0, grid.size))] = 1.0
        elif kind == "steps":
            block = max(min(grid.dims) >> int(rng.integers(1, 6)), 1)
            coarse = [-(-d // block) for d in grid.dims]
            v = np.exp(2 * rng.normal(size=coarse))
            for axis in range(grid.n):
                v = np.repeat(v, block, axis=axis)
            v = v[tuple(slice(0, d) for d in grid.dims)]
        else:
            v = np.exp(rng.normal(size=grid.dims) * 1.5)
        out.append((f"{kind}_{i}", v))
    return out


@dataclass
class BoundednessReport:
    variant: str
    modular_ratios: np.ndarray
    norm_ratios: np.ndarray
    names: list[str]
    skipped: int
    ceiling: float | None = None

    @property
    def modular_constant(self) -> float:
        return float(self.modular_ratios.max())

    @property
    def norm_constant(self) -> float:
        return float(self.norm_ratios.max())

    @property
    def passed(self) -> bool:
        c = self.modular_constant
        return bool(np.isfinite(c) and (self.ceiling is None or c <= self.ceiling))

    def to_dict(self) -> dict:
        i = int(np.argmax(self.modular_ratios))
        return {
            "variant": self.variant,
            "count": int(self.modular_ratios.size),
            "modularConstant": self.modular_constant,
            "normConstant": self.norm_constant,
            "witness": self.names[i],
            "skipped": self.skipped,
            "ceiling": self.ceiling,
            "passed": self.passed,
        }


def _variant_model(nf, variant: str, s: float | None):
    if variant == "primal":
        return nf
    if variant == "dual":
        return nf.conjugate()
    if variant == "leftOpen":
        if s is None or not 0 < s < 1:
            raise InputError("leftOpen needs 0 < s < 1")
        return PowerComposed(nf, s)
    raise InputError(f"unknown variant {variant!r}")


def verify_modular_boundedness(nf, grid: Grid, *, variant: str = "primal", s: float | None = None,
                               count: int = 200, seed: int = 0, functions=None, cubes: CubeFamily | None = None,
                               ceiling: float | None = None, threads: int | None = 1) -> BoundednessReport:
    """Max of ``rho(Mf) / rho(f)`` and ``||Mf|| / ||f||`` over unit-norm test functions.

    ``variant`` picks the function space: ``primal`` (phi), ``dual`` (phi*)
    or ``leftOpen`` (``phi(x, t**s)`` with ``0 < s < 1``).
    """
    model = _variant_model(nf, variant, s)
    funcs = functions if functions is not None else seeded_test_functions(grid, count, seed)

    def one(item):
        _, v = item
        f = GridField(grid, v)
        nrm = luxemburg_norm(model, f)
        if nrm == 0:
            return None
        f = f / nrm
        Mf = hl_maximal(f, cubes)
        rf = modular(model, f)
        return modular(model, Mf) / rf, luxemburg_norm(model, Mf)

    res = ordered_map(one, funcs, threads)
    kept = [(r, name) for r, (name, _) in zip(res, funcs) if r is not None]
    mods = np.array([r[0] for r, _ in kept])
    norms = np.array([r[1] for r, _ in kept])
    label = variant if variant != "leftOpen" else f"leftOpen({s})"
    return BoundednessReport(label, mods, norms, [n for _, n in kept], len(res) - len(kept), ceiling)


def spike_family_ratios(nf, depths, spikes=(1, 3, 5), *, lower: float = -1.0, upper: float = 1.0,
                        variant: str = "primal") -> list[dict]:
    """Max modular ratio over normalised spikes, per grid depth (1D, ``2**depth`` cells).

    The spikes are the indicators of ``[0, 2**-j)`` and ``[2**-j, 2**(1-j))``.
    For a coefficient with a non-integrable singularity at 0 the sampled
    modular of ``Mf`` near 0 grows as the grid resolves the singularity, so the
    ratio diverges with depth; in-class coefficients give a bounded sequence.
    """
    rows = []
    for D in depths:
        grid = Grid.box((lower,), (upper,), 2 ** D)
        x = grid.axes()[0]
        funcs = []
        for j in spikes:
            d = 2.0 ** -j
            funcs.append((f"touching_{j}", ((x >= 0) & (x < d)).astype(float)))
            funcs.append((f"annulus_{j}", ((x >= d) & (x < 2 * d)).astype(float)))
        funcs = [(name, v) for name, v in funcs if v.any()]
        rep = verify_modular_boundedness(nf, grid, variant=variant, functions=funcs)
        rows.append({"depth": int(D), "cells": grid.size, "ratio": rep.modular_constant,
                     "normRatio": rep.norm_constant, "witness": rep.to_dict()["witness"]})
    return rows
