"""Empirical Sobolev-Poincare checks on ball masks.

Both sides are midpoint means over the mask cells.  The gradient comes from
:func:`~doublephase.fields.discrete_gradient` on the whole grid, so cells on
the rim of the ball see their outside neighbours.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PreconditionError
from .fields import discrete_gradient, luxemburg_batch
from .grid import Domain, Grid, GridField, ball
from .parallel import ordered_map

__all__ = [
    "PoincareReport",
    "normalise_gradient",
    "verify_sobolev_poincare",
    "verify_zero_set_variant",
    "zero_set_sweep",
    "random_bump_trials",
    "write_trials_csv",
]

# slack that keeps normalisation idempotent after the bisection lands on rho = 1 +- 1e-10
MODULAR_SLACK = 1e-9


@dataclass(frozen=True)
class PoincareReport:
    center: tuple[float, ...]
    radius: float
    s: float
    lhs: float
    rhs: float
    ratio: float
    lhs_mean: float  # the same left side with s = 1
    scale: float  # u was divided by this before measuring
    gradient_modular: float  # over B, after scaling
    zero_fraction: float | None = None
    allowance: float = 1.0  # (1 + |B|/|E|)**q for the zero-set variant
    extra: dict = field(default_factory=dict)

    @property
    def raw_ratio(self) -> float:
        """Left side over the plain gradient mean, without the zero-set allowance."""
        return self.ratio * self.allowance

    def row(self) -> dict:
        return {
            "center": " ".join(repr(c) for c in self.center),
            "radius": self.radius,
            "s": self.s,
            "LHS": self.lhs,
            "RHS": self.rhs,
            "ratio": self.ratio,
        }

    def to_dict(self) -> dict:
        d = {
            "center": list(self.center),
            "radius": self.radius,
            "s": self.s,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "lhsMean": self.lhs_mean,
            "scale": self.scale,
            "gradientModular": self.gradient_modular,
        }
        if self.zero_fraction is not None:
            d["zeroFraction"] = self.zero_fraction
            d["allowance"] = self.allowance
        return d


def _check_ball(u: GridField, B: Domain):
    if not B.grid.same_as(u.grid):
        raise InputError("field and ball live on different grids")
    if B.center is None or B.radius is None:
        raise InputError("a ball mask (with centre and radius) is required")


def _check_exponent(s: float, n: int):
    s = float(s)
    cap = np.inf if n == 1 else n / (n - 1)
    if not (1.0 < s < cap):
        raise InputError(f"exponent s must satisfy 1 < s < {cap}, got {s}")
    return s


def normalise_gradient(nf, u: GridField, B: Domain) -> tuple[GridField, float]:
    """Scale ``u`` so the gradient modular over ``B`` is at most one.

    Returns ``(u / lam, lam)``; ``lam = 1`` when the modular already fits, so
    applying the step twice changes nothing.
    """
    grad = discrete_gradient(u).magnitude.values
    a = B.restrict(nf.coefficient(u.grid))
    g = B.restrict(grad)
    rho = float(np.sum(nf.phi(a, g)) * u.grid.cell_volume)
    if rho <= 1.0 + MODULAR_SLACK:
        return u, 1.0
    lam = float(luxemburg_batch(nf, a, g, np.zeros(g.size, dtype=np.intp), 1, u.grid.cell_volume)[0])
    return u / lam, lam


def _sides(nf, u: GridField, B: Domain, s: float, centred: bool):
    a = B.restrict(nf.coefficient(u.grid))
    vals = B.restrict(u.values)
    if centred:
        vals = vals - np.mean(vals)
    lower = nf.phi(a, np.abs(vals) / B.radius)
    lhs_mean = float(np.mean(lower))
    lhs = float(np.mean(lower ** s) ** (1.0 / s))
    grad = B.restrict(discrete_gradient(u).magnitude.values)
    gphi = nf.phi(a, grad)
    rhs = float(np.mean(gphi))
    modular = float(np.sum(gphi) * u.grid.cell_volume)
    return lhs, lhs_mean, rhs, modular


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else np.inf


def verify_sobolev_poincare(nf, u: GridField, B: Domain, s: float) -> PoincareReport:
    """Mean-value inequality: ``(avg phi(|u-<u>|/r)**s)**(1/s)`` against ``avg phi(|grad u|)``."""
    _check_ball(u, B)
    s = _check_exponent(s, u.grid.n)
    v, lam = normalise_gradient(nf, u, B)
    lhs, lhs_mean, rhs, modular = _sides(nf, v, B, s, centred=True)
    return PoincareReport(B.center, B.radius, s, lhs, rhs, _ratio(lhs, rhs), lhs_mean, lam, modular)


def verify_zero_set_variant(nf, u: GridField, B: Domain, E, s: float) -> PoincareReport:
    """Inequality for ``u`` vanishing on ``E``, weighted by ``(1 + |B|/|E|)**q``.

    ``E`` is a boolean cell mask; it is intersected with ``B`` and ``u`` must be
    exactly zero there.
    """
    _check_ball(u, B)
    s = _check_exponent(s, u.grid.n)
    E = np.asarray(E, dtype=bool).reshape(u.grid.dims) & B.cells
    if not E.any():
        raise PreconditionError("zero set E has no cells inside the ball")
    if np.any(u.values[E] != 0):
        raise PreconditionError("u does not vanish on E")
    v, lam = normalise_gradient(nf, u, B)
    lhs, lhs_mean, rhs, modular = _sides(nf, v, B, s, centred=False)
    frac = float(E.sum()) / B.count
    allowance = (1.0 + 1.0 / frac) ** float(nf.upper)
    ratio = _ratio(lhs, allowance * rhs)
    return PoincareReport(B.center, B.radius, s, lhs, rhs, ratio, lhs_mean, lam, modular, frac, allowance)


def zero_set_sweep(nf, B: Domain, fractions=(0.5, 0.25, 0.1), s: float = 1.2, slope: float = 1.0):
    """Ramp profiles ``slope * (x1 - c)_+`` with ``c`` placed so ``{u = 0}`` holds each fraction of ``B``."""
    g = B.grid
    x1 = g.centers()[0]
    inside = np.sort(x1[B.cells])
    out = []
    for frac in fractions:
        k = max(int(round(frac * inside.size)), 1)
        c = inside[k - 1]
        u = GridField(g, slope * np.maximum(x1 - c, 0.0))
        out.append(verify_zero_set_variant(nf, u, B, x1 <= c, s))
    return out


def _bump_trial(args):
    nf, grid, s, seed = args
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(grid.origin), np.asarray(grid.upper)
    half = float(np.min(hi - lo)) / 2
    r = rng.uniform(0.25, 0.9) * half
    center = rng.uniform(lo + r, hi - r)
    B = ball(grid, center, r)
    u = np.zeros(grid.dims)
    X = grid.centers()
    for _ in range(int(rng.integers(1, 4))):
        c = rng.uniform(lo, hi)
        w = rng.uniform(0.1, 0.5) * half
        amp = rng.normal() * rng.uniform(0.5, 20.0)
        u += amp * np.exp(-sum((x - ci) ** 2 for x, ci in zip(X, c)) / (2 * w * w))
    return verify_sobolev_poincare(nf, GridField(grid, u), B, s)


def random_bump_trials(nf, grid: Grid, count: int = 100, seed: int = 0, s: float = 1.2, threads=1):
    """Seeded sums of Gaussian bumps on random balls inside the grid box."""
    seeds = np.random.SeedSequence(seed).generate_state(count)
    return ordered_map(_bump_trial, [(nf, grid, s, int(k)) for k in seeds], threads)


def write_trials_csv(path, reports) -> None:
    fields = ["center", "radius", "s", "LHS", "RHS", "ratio"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in reports:
            w.writerow(r.row())
