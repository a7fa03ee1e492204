"""Modulating coefficients ``a(x)`` and classical Muckenhoupt ``A_p`` constants.

Every weight is a small frozen dataclass with a vectorised ``__call__`` taking
an ``(..., n)`` array of points.  :func:`weight_from_dict` and ``to_dict`` give
the config-file representation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubes import CubeFamily
from .errors import ConfigError, DomainError, InputError
from .grid import Grid, GridField, read_field

__all__ = [
    "WeightSpec",
    "Zero",
    "Constant",
    "PowerClipped",
    "Power",
    "HoelderBump",
    "Checkerboard",
    "UserGrid",
    "Combo",
    "eval_weight",
    "sample_weight",
    "weight_from_dict",
    "classical_ap_constant",
    "ap_products",
]


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


class WeightSpec:
    """Base class; subclasses implement ``__call__(points) -> values``."""

    kind = "abstract"

    def __call__(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def check(self, n: int) -> None:
        """Validate against the space dimension ``n``."""


@dataclass(frozen=True)
class Zero(WeightSpec):
    kind = "zero"

    def __call__(self, x):
        return np.zeros(np.shape(x)[:-1])

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Constant(WeightSpec):
    c: float
    kind = "constant"

    def __post_init__(self):
        if not self.c >= 0:
            raise InputError("constant weight must be non-negative")

    def __call__(self, x):
        return np.full(np.shape(x)[:-1], float(self.c))

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class PowerClipped(WeightSpec):
    """``a(x) = min(|x - center|**alpha, 1)``."""

    alpha: float
    center: tuple[float, ...] | None = None
    kind = "power_clipped"

    def check(self, n):
        if not self.alpha > -n:
            raise InputError(f"alpha={self.alpha} must exceed -n={-n}")

    def __call__(self, x):
        r = _norm(np.asarray(x, float) - _center(self.center, x))
        with np.errstate(divide="ignore"):
            return np.minimum(r ** self.alpha, 1.0)

    def to_dict(self):
        return _with_center({"kind": self.kind, "alpha": self.alpha}, self.center)


@dataclass(frozen=True)
class Power(WeightSpec):
    """``a(x) = |x - center|**alpha``; singular at the centre when ``alpha < 0``.

    Pointwise evaluation exactly at a singular centre returns ``inf``; grids
    with an even number of cells around the centre never sample it.  Sampling
    requires ``alpha > -n`` unless ``strict`` is off, which the divergence
    experiments use on purpose.
    """

    alpha: float
    center: tuple[float, ...] | None = None
    strict: bool = True
    kind = "power"

    def check(self, n):
        if self.strict and not self.alpha > -n:
            raise InputError(f"alpha={self.alpha} must exceed -n={-n} for local integrability")

    def __call__(self, x):
        r = _norm(np.asarray(x, float) - _center(self.center, x))
        with np.errstate(divide="ignore"):
            return r ** self.alpha

    def to_dict(self):
        d = _with_center({"kind": self.kind, "alpha": self.alpha}, self.center)
        if not self.strict:
            d["strict"] = False
        return d


@dataclass(frozen=True)
class HoelderBump(WeightSpec):
    """``a(x) = min(1, min_i (c_i + |x - z_i|**alpha))``.

    Each cone satisfies ``cone(x) <= C (cone(y) + |x - y|**alpha)`` with
    ``C = max(1, 2**(alpha - 1))``; taking the min and clipping keep the bound.
    """

    alpha: float
    centers: tuple[tuple[float, ...], ...]
    offsets: tuple[float, ...] | None = None
    kind = "hoelder_bump"

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(tuple(float(v) for v in z) for z in self.centers))
        if not self.centers:
            raise InputError("HoelderBump needs at least one centre")
        if self.offsets is not None:
            object.__setattr__(self, "offsets", tuple(float(c) for c in self.offsets))
            if len(self.offsets) != len(self.centers):
                raise InputError("one offset per centre")
            if min(self.offsets) < 0:
                raise InputError("offsets must be non-negative")
        if not self.alpha > 0:
            raise InputError("alpha must be positive")

    def __call__(self, x):
        x = np.asarray(x, float)
        offs = self.offsets or (0.0,) * len(self.centers)
        out = np.ones(x.shape[:-1])
        for z, c in zip(self.centers, offs):
            out = np.minimum(out, c + _norm(x - np.asarray(z)) ** self.alpha)
        return out

    def to_dict(self):
        d = {"kind": self.kind, "alpha": self.alpha, "centers": [list(z) for z in self.centers]}
        if self.offsets is not None:
            d["offsets"] = list(self.offsets)
        return d


@dataclass(frozen=True)
class Checkerboard(WeightSpec):
    """Two levels alternating on the cells of side ``scale`` (parity of the cell index sum)."""

    levels: tuple[float, float]
    scale: float
    kind = "checkerboard"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if len(self.levels) != 2 or min(self.levels) < 0:
            raise InputError("checkerboard needs two non-negative levels")
        if not self.scale > 0:
            raise InputError("checkerboard scale must be positive")

    def __call__(self, x):
        idx = np.floor(np.asarray(x, float) / self.scale).astype(np.int64)
        parity = np.sum(idx, axis=-1) % 2
        return np.where(parity == 0, self.levels[0], self.levels[1])

    def to_dict(self):
        return {"kind": self.kind, "levels": list(self.levels), "scale": self.scale}


@dataclass(frozen=True)
class UserGrid(WeightSpec):
    """Piecewise-constant weight read from a grid field; undefined outside its box."""

    field: GridField
    source: str | None = None
    kind = "user_grid"

    def __post_init__(self):
        if np.any(self.field.values < 0):
            raise InputError("user grid weight has negative values")

    def __call__(self, x):
        x = np.asarray(x, float)
        g = self.field.grid
        lo, hi = np.asarray(g.origin), np.asarray(g.upper)
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError("point outside the user grid weight's box")
        idx = np.floor((x - lo) / g.h).astype(int)
        idx = np.minimum(np.maximum(idx, 0), np.asarray(g.dims) - 1)
        return self.field.values[tuple(np.moveaxis(idx, -1, 0))]

    def to_dict(self):
        if self.source is None:
            raise InputError("user grid weight without a source path cannot be serialised")
        return {"kind": self.kind, "path": self.source}


_COMBO_OPS = {"sum": np.add, "min": np.minimum, "max": np.maximum}


@dataclass(frozen=True)
class Combo(WeightSpec):
    op: str
    left: WeightSpec
    right: WeightSpec
    kind = "combo"

    def __post_init__(self):
        if self.op not in _COMBO_OPS:
            raise InputError(f"combo op must be one of {sorted(_COMBO_OPS)}")

    def check(self, n):
        self.left.check(n)
        self.right.check(n)

    def __call__(self, x):
        return _COMBO_OPS[self.op](self.left(x), self.right(x))

    def to_dict(self):
        return {"kind": self.kind, "op": self.op, "left": self.left.to_dict(), "right": self.right.to_dict()}


def _center(center, x):
    n = np.shape(x)[-1]
    return np.zeros(n) if center is None else np.asarray(center, float)


def _with_center(d, center):
    if center is not None:
        d["center"] = list(center)
    return d


def eval_weight(w: WeightSpec, x) -> float:
    """Value of ``w`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise InputError("point must be finite")
    return float(w(x[None, :])[0])


def sample_weight(w: WeightSpec, grid: Grid) -> np.ndarray:
    """Weight at the cell centres, shaped like the grid."""
    w.check(grid.n)
    vals = np.asarray(w(grid.points()), dtype=float).reshape(grid.dims)
    if np.any(vals < 0) or np.any(np.isnan(vals)):
        raise InputError("weight produced negative or NaN samples")
    return vals


def weight_from_dict(d: dict, base_dir=None) -> WeightSpec:
    """Build a weight from its config representation."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("weight block needs a 'kind'")
    kind = d["kind"]
    try:
        if kind == "zero":
            return Zero()
        if kind == "constant":
            return Constant(float(d["c"]))
        if kind in ("power_clipped", "power"):
            center = d.get("center")
            center = tuple(center) if center is not None else None
            if kind == "power":
                return Power(float(d["alpha"]), center, bool(d.get("strict", True)))
            return PowerClipped(float(d["alpha"]), center)
        if kind == "hoelder_bump":
            offs = d.get("offsets")
            return HoelderBump(float(d["alpha"]), tuple(tuple(z) for z in d["centers"]),
                               tuple(offs) if offs is not None else None)
        if kind == "checkerboard":
            return Checkerboard(tuple(d["levels"]), float(d["scale"]))
        if kind == "user_grid":
            from pathlib import Path

            path = Path(d["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise ConfigError(f"weight file {path} does not exist")
            return UserGrid(read_field(path), source=str(d["path"]))
        if kind == "combo":
            return Combo(d["op"], weight_from_dict(d["left"], base_dir), weight_from_dict(d["right"], base_dir))
    except KeyError as exc:
        raise ConfigError(f"weight kind '{kind}' is missing key {exc}") from exc
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown weight kind '{kind}'")


# -- classical A_p -------------------------------------------------------------


def ap_products(w: WeightSpec | np.ndarray, p: float, cubes: CubeFamily, grid: Grid) -> np.ndarray:
    """Per-cube ``(avg w) * (avg w**(-1/(p-1)))**(p-1)``; ``inf`` where w vanishes."""
    if not p > 1:
        raise InputError("A_p needs p > 1")
    vals = w if isinstance(w, np.ndarray) else sample_weight(w, grid)
    vals = np.asarray(vals, float).ravel()
    inc = cubes.incidence(grid)
    wv = vals[inc.cells]
    with np.errstate(divide="ignore"):
        dual = np.where(wv > 0, wv, 0.0) ** (-1.0 / (p - 1.0))
    dual = np.where(wv > 0, dual, np.inf)
    avg_w = inc.mean(wv)
    avg_dual = inc.mean(dual)
    with np.errstate(invalid="ignore"):
        prod = avg_w * avg_dual ** (p - 1.0)
    # all-zero cube: 0 * inf; such a cube is non-integrable for the dual power
    return np.where(np.isnan(prod), np.inf, prod)


def classical_ap_constant(w: WeightSpec | np.ndarray, p: float, cubes: CubeFamily, grid: Grid) -> float:
    """Midpoint-rule estimate of ``[w]_{A_p}`` over a cube family (``inf`` flags non-integrability)."""
    return float(np.max(ap_products(w, p, cubes, grid)))
