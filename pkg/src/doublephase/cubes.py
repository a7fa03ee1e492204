"""Axis-aligned cubes, dyadic addressing and the shifted dyadic grids.

Shifted grids use the one-third trick in exact integer arithmetic: grid
``t in {0, 1, 2}`` places the boundaries of its cubes of side ``2**j`` units at
``m * 2**j + t * ((-2)**j - 1) / 3``.  The offset is an integer for every ``j``,
vanishes at ``j = 0`` and changes by a multiple of ``2**(j-1)`` between
consecutive levels, so each grid is nested.  In ``n`` dimensions a grid is a
tuple of per-axis shifts, giving ``3**n`` grids.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, InputError
from .grid import Grid

__all__ = ["Cube", "CubeFamily", "shift_offset", "grid_shifts"]


def shift_offset(t: int, j: int) -> int:
    """Boundary offset (in units) of shifted grid ``t`` at side ``2**j`` units."""
    return t * (((-2) ** j) - 1) // 3


def grid_shifts(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(3), repeat=n))


@dataclass(frozen=True)
class Cube:
    """Half-open cube ``[corner, corner + side)``.

    ``level``/``index``/``shift`` record the dyadic address when the cube was
    produced by a dyadic family; explicit cubes leave them ``None``.
    """

    corner: tuple[float, ...]
    side: float
    level: int | None = None
    index: tuple[int, ...] | None = None
    shift: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(float(c) for c in self.corner))
        if not self.side > 0:
            raise InputError("cube side must be positive")

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def measure(self) -> float:
        return self.side ** self.n

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(c + self.side / 2 for c in self.corner)

    def contains_point(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = np.asarray(self.corner)
        return bool(np.all(x >= lo) and np.all(x < lo + self.side))

    def contains_cube(self, other: "Cube", tol: float = 1e-12) -> bool:
        lo, olo = np.asarray(self.corner), np.asarray(other.corner)
        return bool(np.all(olo >= lo - tol) and np.all(olo + other.side <= lo + self.side + tol))

    def ranges(self, grid: Grid) -> list[range]:
        """Per-axis index ranges of the cells whose centres lie in the cube."""
        if grid.n != self.n:
            raise InputError("cube and grid dimensions differ")
        out = []
        for c, o, d in zip(self.corner, grid.origin, grid.dims):
            lo = math.ceil((c - o) / grid.h - 0.5 - 1e-9)
            hi = math.ceil((c + self.side - o) / grid.h - 0.5 - 1e-9)
            out.append(range(max(lo, 0), min(hi, d)))
        return out

    def cells(self, grid: Grid) -> np.ndarray:
        """Flat (row-major) indices of the cells sampled by this cube."""
        rng = self.ranges(grid)
        if any(len(r) == 0 for r in rng):
            return np.zeros(0, dtype=np.intp)
        mesh = np.meshgrid(*[np.asarray(r) for r in rng], indexing="ij")
        return np.ravel_multi_index([m.ravel() for m in mesh], grid.dims)

    def inside(self, grid: Grid, tol: float = 1e-9) -> bool:
        lo = np.asarray(self.corner)
        return bool(
            np.all(lo >= np.asarray(grid.origin) - tol * grid.h)
            and np.all(lo + self.side <= np.asarray(grid.upper) + tol * grid.h)
        )

    def to_dict(self) -> dict:
        d = {"corner": list(self.corner), "side": self.side}
        if self.level is not None:
            d["level"] = self.level
            d["index"] = list(self.index)
            d["shift"] = list(self.shift)
        return d


def _square_cells(grid: Grid) -> int:
    if len(set(grid.dims)) != 1:
        raise DomainError("dyadic families need a square grid")
    return grid.dims[0]


@dataclass(frozen=True)
class CubeFamily:
    cubes: tuple[Cube, ...]
    policy: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "cubes", tuple(self.cubes))
        if not self.cubes:
            raise InputError("cube family is empty")

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    @classmethod
    def dyadic(cls, grid: Grid, depth: int) -> "CubeFamily":
        """Standard dyadic cubes of the grid box, levels ``0..depth``."""
        return cls._dyadic(grid, depth, [tuple([0] * grid.n)], "DyadicToDepth")

    @classmethod
    def shifted_dyadic(cls, grid: Grid, depth: int) -> "CubeFamily":
        """Cubes of all ``3**n`` shifted dyadic grids lying inside the box."""
        return cls._dyadic(grid, depth, grid_shifts(grid.n), "ShiftedDyadic")

    @classmethod
    def _dyadic(cls, grid, depth, shifts, policy):
        N = _square_cells(grid)
        if depth < 0 or N % (2 ** depth):
            raise DomainError(f"{N} cells per axis cannot be split to depth {depth}")
        unit = N // 2 ** depth
        cubes = []
        for t in shifts:
            for k in range(depth + 1):
                j = depth - k
                side_cells = unit * 2 ** j
                offs = [unit * shift_offset(ti, j) for ti in t]
                # index ranges of cubes fully inside [0, N)
                per_axis = []
                for off in offs:
                    m_lo = -((off) // side_cells)  # smallest m with m*side+off >= 0
                    m_hi = (N - off) // side_cells - 1
                    per_axis.append(range(m_lo, m_hi + 1))
                for m in itertools.product(*per_axis):
                    corner = tuple(
                        o + (mi * side_cells + off) * grid.h for mi, off, o in zip(m, offs, grid.origin)
                    )
                    cubes.append(Cube(corner, side_cells * grid.h, level=k, index=tuple(m), shift=tuple(t)))
        return cls(tuple(cubes), policy, {"depth": depth})

    @classmethod
    def random(cls, grid: Grid, count: int, seed: int, min_cells: int = 1) -> "CubeFamily":
        """``count`` grid-aligned cubes with uniformly drawn side and position."""
        N = min(grid.dims)
        rng = np.random.default_rng(seed)
        cubes = []
        for _ in range(count):
            s = int(rng.integers(min_cells, N + 1))
            start = [int(rng.integers(0, d - s + 1)) for d in grid.dims]
            corner = tuple(o + i * grid.h for o, i in zip(grid.origin, start))
            cubes.append(Cube(corner, s * grid.h))
        return cls(tuple(cubes), "RandomCubes", {"count": count, "seed": seed})

    def restricted_to(self, grid: Grid) -> "CubeFamily":
        kept = tuple(c for c in self.cubes if c.inside(grid))
        return CubeFamily(kept, self.policy, dict(self.params))

    def cell_lists(self, grid: Grid) -> list[np.ndarray]:
        return [c.cells(grid) for c in self.cubes]

    def incidence(self, grid: Grid) -> "Incidence":
        return Incidence.build(self, grid)

    def describe(self) -> dict:
        return {"policy": self.policy, **self.params, "count": len(self.cubes)}


@dataclass(frozen=True)
class Incidence:
    """Flattened (cube, cell) pairs for vectorised per-cube reductions."""

    cube_ids: np.ndarray
    cells: np.ndarray
    counts: np.ndarray
    n_cubes: int

    @classmethod
    def build(cls, family: CubeFamily, grid: Grid) -> "Incidence":
        lists = family.cell_lists(grid)
        counts = np.array([len(c) for c in lists], dtype=np.intp)
        if np.any(counts == 0):
            raise DomainError("a cube of the family contains no grid cell")
        ids = np.repeat(np.arange(len(lists)), counts)
        return cls(ids, np.concatenate(lists), counts, len(lists))

    def sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.cube_ids, weights=values, minlength=self.n_cubes)

    def mean(self, values: np.ndarray) -> np.ndarray:
        return self.sum(values) / self.counts

    def max(self, values: np.ndarray) -> np.ndarray:
        out = np.full(self.n_cubes, -np.inf)
        np.maximum.at(out, self.cube_ids, values)
        return out

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)])
