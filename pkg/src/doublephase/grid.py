"""Uniform cell-centred grids, sampled fields and masked subdomains.

A :class:`Grid` is an axis-aligned box split into ``dims`` cells of side ``h``.
Values live at cell centres ``origin + (i + 1/2) h``.  Arrays are indexed
``[i_0, i_1]`` with axis ``k`` along coordinate ``x_{k+1}``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "Grid",
    "GridField",
    "Domain",
    "ball",
    "read_field",
    "write_field",
    "read_field_csv",
    "write_field_csv",
]

_HEADER = "# gridfield v1"


@dataclass(frozen=True)
class Grid:
    dims: tuple[int, ...]
    origin: tuple[float, ...]
    h: float

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        origin = tuple(float(o) for o in self.origin)
        if len(dims) not in (1, 2):
            raise InputError("only 1D and 2D grids are supported")
        if len(origin) != len(dims):
            raise InputError("origin and dims have different lengths")
        if any(d < 1 for d in dims):
            raise InputError("every axis needs at least one cell")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InputError("spacing must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float], cells: int) -> "Grid":
        """Square-celled grid on ``[lower, upper]`` with ``cells`` cells along axis 0."""
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
        h = (upper[0] - lower[0]) / cells
        dims = tuple(int(round((u - l) / h)) for l, u in zip(lower, upper))
        return cls(dims, lower, h)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + d * self.h for o, d in zip(self.origin, self.dims))

    def axes(self) -> list[np.ndarray]:
        return [o + (np.arange(d) + 0.5) * self.h for o, d in zip(self.origin, self.dims)]

    def centers(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``dims``, one per axis."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def points(self) -> np.ndarray:
        """Cell centres as an ``(size, n)`` array in row-major order."""
        return np.stack([c.ravel() for c in self.centers()], axis=-1)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = np.asarray(self.origin) - tol
        hi = np.asarray(self.upper) + tol
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def locate(self, x) -> tuple[int, ...]:
        """Index of the cell containing ``x`` (closed on the upper box face)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,) or not self.contains(x):
            raise DomainError(f"point {tuple(x)} outside grid box {self.origin}..{self.upper}")
        idx = np.floor((x - np.asarray(self.origin)) / self.h).astype(int)
        return tuple(int(min(max(i, 0), d - 1)) for i, d in zip(idx, self.dims))

    def same_as(self, other: "Grid") -> bool:
        return (
            self.dims == other.dims
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12 * max(1.0, self.h))
            and math.isclose(self.h, other.h, rel_tol=1e-12)
        )


@dataclass(frozen=True)
class GridField:
    """Real values sampled at the cell centres of ``grid``; immutable."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.size != self.grid.size:
            raise InputError(f"{v.size} values for a grid of {self.grid.size} cells")
        v = v.reshape(self.grid.dims)
        if not np.all(np.isfinite(v)):
            raise InputError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "GridField":
        """Sample ``fn(x1, ..., xn)`` at the cell centres."""
        vals = np.broadcast_to(np.asarray(fn(*grid.centers()), dtype=float), grid.dims)
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridField":
        return cls(grid, np.full(grid.dims, float(c)))

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.with_values(self.values / c)

    def __add__(self, other):
        if isinstance(other, GridField):
            _check_same_grid(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridField):
            _check_same_grid(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)


def _check_same_grid(f: GridField, g: GridField):
    if not f.grid.same_as(g.grid):
        raise InputError("fields live on different grids")


@dataclass(frozen=True)
class Domain:
    """A grid box restricted by an optional boolean cell mask.

    ``radius`` and ``center`` are recorded for ball masks so estimators can use
    the exact radius rather than one inferred from the pixelated set.
    """

    grid: Grid
    mask: np.ndarray | None = field(default=None, repr=False)
    center: tuple[float, ...] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool).reshape(self.grid.dims).copy()
            if not m.any():
                raise DomainError("mask selects no cells")
            m.flags.writeable = False
            object.__setattr__(self, "mask", m)

    @property
    def cells(self) -> np.ndarray:
        """Boolean mask over the grid (all True when unmasked)."""
        if self.mask is None:
            return np.ones(self.grid.dims, dtype=bool)
        return self.mask

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    @property
    def measure(self) -> float:
        return self.count * self.grid.cell_volume

    def restrict(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.grid.dims)[self.cells]

    def mean(self, values: np.ndarray) -> float:
        return float(np.mean(self.restrict(values)))


def ball(grid: Grid, center: Sequence[float], r: float, *, check_inside: bool = True) -> Domain:
    """Cells whose centres satisfy ``|x_c - center| < r``."""
    center = tuple(float(c) for c in center)
    if len(center) != grid.n:
        raise InputError("ball centre has the wrong dimension")
    if check_inside:
        lo = np.asarray(center) - r
        hi = np.asarray(center) + r
        eps = 1e-12 * max(1.0, r)
        if np.any(lo < np.asarray(grid.origin) - eps) or np.any(hi > np.asarray(grid.upper) + eps):
            raise DomainError(f"ball B({center}, {r}) leaves the grid box")
    dist2 = sum((c - x0) ** 2 for c, x0 in zip(grid.centers(), center))
    mask = dist2 < r * r
    if not mask.any():
        raise DomainError(f"ball B({center}, {r}) contains no cell centre")
    return Domain(grid, mask, center=center, radius=float(r))


# -- file formats -------------------------------------------------------------


def write_field(path, f: GridField) -> None:
    """Text format: header lines (n, dims, origin, spacing) then row-major values."""
    g = f.grid
    lines = [
        _HEADER,
        f"n {g.n}",
        "dims " + " ".join(str(d) for d in g.dims),
        "origin " + " ".join(repr(float(o)) for o in g.origin),
        f"spacing {g.h!r}",
        "values",
    ]
    vals = f.values.reshape(g.dims[0], -1)
    body = [" ".join(repr(float(v)) for v in row) for row in vals]
    Path(path).write_text("\n".join(lines + body) + "\n")


def read_field(path) -> GridField:
    text = Path(path).read_text().splitlines()
    header: dict[str, list[str]] = {}
    body_start = None
    for lineno, line in enumerate(text):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if s == "values":
            body_start = lineno + 1
            break
        key, *rest = s.split()
        header[key] = rest
    try:
        n = int(header["n"][0])
        dims = tuple(int(v) for v in header["dims"])
        origin = tuple(float(v) for v in header["origin"])
        h = float(header["spacing"][0])
    except (KeyError, IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed grid-field header ({exc})") from exc
    if body_start is None:
        raise InputError(f"{path}: missing 'values' line")
    if len(dims) != n:
        raise InputError(f"{path}: n={n} but {len(dims)} dims")
    try:
        values = np.array(" ".join(text[body_start:]).split(), dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric value ({exc})") from exc
    return GridField(Grid(dims, origin, h), values)


def write_field_csv(path, f: GridField) -> None:
    """One row per cell: centre coordinates then value."""
    g = f.grid
    names = [f"x{k + 1}" for k in range(g.n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["value"])
        for pt, v in zip(g.points(), f.values.ravel()):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])


def read_field_csv(path, h: float | None = None) -> GridField:
    """Inverse of :func:`write_field_csv`; spacing is inferred unless given."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty CSV")
    head, data = rows[0], np.array(rows[1:], dtype=float)
    n = len(head) - 1
    coords = data[:, :n]
    axes = [np.unique(coords[:, k]) for k in range(n)]
    if h is None:
        diffs = [np.diff(a) for a in axes if a.size > 1]
        if not diffs:
            raise InputError(f"{path}: cannot infer spacing from a single cell")
        h = float(np.median(np.concatenate(diffs)))
    dims = tuple(a.size for a in axes)
    origin = tuple(float(a[0] - h / 2) for a in axes)
    grid = Grid(dims, origin, h)
    idx = [np.rint((coords[:, k] - axes[k][0]) / h).astype(int) for k in range(n)]
    vals = np.zeros(dims)
    vals[tuple(idx)] = data[:, n]
    return GridField(grid, vals)
