"""The double phase N-function and the functions derived from it.

All models share a per-cell parameter, the coefficient ``a`` sampled from the
weight, and expose a vectorised ``phi(a, t)`` together with lower/upper
Simonenko indices.  That common surface is what the norm, maximal-operator and
Muckenhoupt code consumes.

Conjugates of the double phase function scale exactly: with
``phi1(t) = t**p/p + t**q/q`` and ``a > 0``,

    phi*(a, s) = a**(-p/(q-p)) * phi1*(s * a**((p-1)/(q-p))),

so one brute-force Legendre table of ``phi1*`` serves every coefficient value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .cubes import Cube
from .errors import BracketError, DomainError, InputError
from .grid import Grid
from .weights import WeightSpec, Zero, eval_weight, sample_weight

__all__ = [
    "NFunction",
    "ConjugateMode",
    "CLOSED_FORM",
    "BRUTE_FORCE",
    "ConjugateNFunction",
    "Biconjugate",
    "ClosedFormConjugate",
    "PowerComposed",
    "AveragedNFunction",
    "eval_phi",
    "eval_phi_prime",
    "conjugate",
    "conjugate_many",
    "averaged_nfunction",
    "power_compose",
    "legendre_max",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _dual(r: float) -> float:
    return r / (r - 1.0)


class _Model:
    """Shared plumbing: coefficient sampling and caching per grid."""

    base: "NFunction"

    def coefficient(self, grid: Grid) -> np.ndarray:
        return self.base.coefficient(grid)


@dataclass(frozen=True, eq=False)
class NFunction(_Model):
    """``phi(x, t) = t**p / p + a(x) t**q / q`` with ``1 < p < q``."""

    p: float
    q: float
    weight: WeightSpec = field(default_factory=Zero)

    def __post_init__(self):
        if not (1.0 < self.p < self.q < math.inf):
            raise InputError(f"need 1 < p < q < inf, got p={self.p}, q={self.q}")
        object.__setattr__(self, "_cache", {})

    @property
    def base(self):
        return self

    @property
    def lower(self) -> float:
        return self.p

    @property
    def upper(self) -> float:
        return self.q

    @property
    def name(self) -> str:
        return "phi"

    def phi(self, a, t):
        a = np.asarray(a, float)
        t = np.asarray(t, float)
        return t ** self.p / self.p + a * t ** self.q / self.q

    def dphi(self, a, t):
        a = np.asarray(a, float)
        t = np.asarray(t, float)
        return t ** (self.p - 1.0) + a * t ** (self.q - 1.0)

    def coefficient(self, grid: Grid) -> np.ndarray:
        key = (grid.dims, grid.origin, grid.h)
        cache = self._cache
        if key not in cache:
            vals = sample_weight(self.weight, grid)
            vals.flags.writeable = False
            cache[key] = vals
        return cache[key]

    def conjugate(self, mode: "ConjugateMode | None" = None):
        mode = BRUTE_FORCE if mode is None else mode
        if mode.kind == "closed_form":
            return ClosedFormConjugate(self)
        return ConjugateNFunction(self)

    def describe(self) -> dict:
        return {"p": self.p, "q": self.q, "weight": self.weight.to_dict()}


@dataclass(frozen=True)
class ConjugateMode:
    """Selects the closed-form equivalent or the brute-force Legendre transform.

    ``nodes`` and ``cutoff`` configure the geometric ``t``-grid of the brute
    force; ``cutoff=None`` doubles the upper end until the maximiser is interior.
    """

    kind: str
    nodes: int = 2048
    cutoff: float | None = None
    t_min: float = 1e-8
    refine: bool = True

    def __post_init__(self):
        if self.kind not in ("closed_form", "brute_force"):
            raise InputError(f"unknown conjugate mode {self.kind!r}")
        if self.nodes < 3 or (self.cutoff is not None and not self.cutoff > 0) or not self.t_min > 0:
            raise InputError("brute-force grid needs >= 3 nodes and positive bounds")


CLOSED_FORM = ConjugateMode("closed_form")
BRUTE_FORCE = ConjugateMode("brute_force")


# -- brute-force Legendre -----------------------------------------------------


def _golden_max(fun, lo, hi, iters=100):
    """Vectorised golden-section maximisation of a concave ``fun`` on ``[lo, hi]``."""
    lo = np.array(lo, float)
    hi = np.array(hi, float)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new = np.where(left, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
        fnew = fun(new)
        x1, x2, f1, f2 = (
            np.where(left, new, x2),
            np.where(left, x1, new),
            np.where(left, fnew, f2),
            np.where(left, f1, fnew),
        )
        if np.all(hi - lo <= 1e-15 * np.abs(hi)):
            break
    better = f1 >= f2
    return np.where(better, x1, x2), np.where(better, f1, f2)


def legendre_max(
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    s,
    *,
    nodes: int = 2048,
    t_min: float = 1e-8,
    cutoff: float | None = None,
    refine: bool = True,
    max_doublings: int = 400,
):
    """``sup_{t >= 0} (s t - fun(t))`` by maximisation over a geometric ``t``-grid.

    ``fun(t, rows)`` evaluates the convex function on a ``(len(rows), k)``
    block, where ``rows`` indexes ``s`` (for per-item parameters).  Without a
    ``cutoff`` the upper end starts at 1 and doubles until the grid argmax is
    interior; with one, an argmax on the last node raises :class:`BracketError`.
    The argmax is refined by golden section between its grid neighbours and
    ``t = 0`` always competes, so the result is ``>= 0``.  Returns the values
    and the maximisers.
    """
    s = np.atleast_1d(np.asarray(s, float))
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise InputError("conjugate argument must be finite and >= 0")
    out = np.zeros_like(s)
    arg = np.zeros_like(s)
    upper = np.full(s.shape, 1.0 if cutoff is None else float(cutoff))
    if np.any(upper <= t_min):
        raise InputError("cutoff must exceed the smallest grid node")
    frac = np.arange(nodes) / (nodes - 1.0)
    todo = np.flatnonzero(s > 0)
    for _ in range(max_doublings + 1):
        if todo.size == 0:
            break
        tg = t_min * np.exp(np.log(upper[todo] / t_min)[:, None] * frac[None, :])
        vals = s[todo, None] * tg - fun(tg, todo)
        m = np.argmax(vals, axis=1)
        at_edge = m == nodes - 1
        if cutoff is not None and np.any(at_edge):
            raise BracketError(
                f"maximiser beyond the cutoff {cutoff} for s={s[todo[at_edge]][:3].tolist()}"
            )
        rows = np.flatnonzero(~at_edge)
        idx = todo[rows]
        mm = m[rows]
        best = vals[rows, mm]
        tbest = tg[rows, mm]
        if refine and idx.size:
            lo = np.where(mm == 0, 0.0, tg[rows, np.maximum(mm - 1, 0)])
            hi = tg[rows, mm + 1]

            def g(t, idx=idx):
                return s[idx] * t - fun(t[:, None], idx)[:, 0]

            tr, fr = _golden_max(g, lo, hi)
            better = fr > best
            best = np.where(better, fr, best)
            tbest = np.where(better, tr, tbest)
        out[idx] = np.maximum(best, 0.0)
        arg[idx] = np.where(best > 0, tbest, 0.0)
        todo = todo[at_edge]
        upper[todo] *= 2.0
    else:
        raise BracketError("could not bracket the Legendre maximiser")
    return out, arg


# -- pointwise API ------------------------------------------------------------


def eval_phi(nf: NFunction, x, t: float) -> float:
    """``phi(x, t)`` at one point."""
    if t < 0:
        raise InputError("t must be >= 0")
    return float(nf.phi(eval_weight(nf.weight, x), t))


def eval_phi_prime(nf: NFunction, x, t: float) -> float:
    """Right derivative ``t**(p-1) + a(x) t**(q-1)``; zero at ``t = 0``."""
    if t < 0:
        raise InputError("t must be >= 0")
    return float(nf.dphi(eval_weight(nf.weight, x), t))


def _closed_form_conjugate(p, q, a, s):
    pd, qd = _dual(p), _dual(q)
    a = np.asarray(a, float)
    s = np.asarray(s, float)
    first = s ** pd / pd
    with np.errstate(divide="ignore", invalid="ignore"):
        second = np.where(a > 0, np.where(a > 0, a, 1.0) ** (1.0 - qd) * s ** qd, np.inf)
    return np.minimum(first, second)


def conjugate(nf: NFunction, mode: ConjugateMode, x, s: float) -> float:
    """``phi*(x, s)`` either as the closed-form equivalent or by brute force."""
    if s < 0:
        raise InputError("s must be >= 0")
    a = eval_weight(nf.weight, x)
    if mode.kind == "closed_form":
        return float(_closed_form_conjugate(nf.p, nf.q, a, s))
    vals, _ = legendre_max(
        lambda t, rows: nf.phi(a, t),
        [s],
        nodes=mode.nodes,
        t_min=mode.t_min,
        cutoff=mode.cutoff,
        refine=mode.refine,
    )
    return float(vals[0])


_CHUNK = 256


def conjugate_many(nf: NFunction, a, s, mode: ConjugateMode = BRUTE_FORCE) -> np.ndarray:
    """Brute-force ``phi*`` for arrays of coefficient values and arguments."""
    a, s = np.broadcast_arrays(np.asarray(a, float), np.asarray(s, float))
    a = a.ravel()
    shape = s.shape
    s = s.ravel()
    if mode.kind == "closed_form":
        return _closed_form_conjugate(nf.p, nf.q, a, s).reshape(shape)

    out = np.empty_like(s)
    for start in range(0, s.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        ac = a[sl]

        def fun(t, rows, ac=ac):
            return nf.phi(ac[rows][:, None], t)

        out[sl], _ = legendre_max(
            fun, s[sl], nodes=mode.nodes, t_min=mode.t_min, cutoff=mode.cutoff, refine=mode.refine
        )
    return out.reshape(shape)


# -- tabulated reduced conjugates ---------------------------------------------

_TABLE_NODES = 9601


def _log10_range(small_power, large_power, reach):
    """Table range in log10 keeping ``x**power`` clear of under- and overflow."""
    return max(-reach, -280.0 / small_power), min(reach, 280.0 / large_power)


@lru_cache(maxsize=32)
def _reduced_conjugate_table(p: float, q: float):
    """Brute-force table of ``phi1*(sigma)`` for ``phi1(t) = t**p/p + t**q/q``.

    The maximiser solves ``t**(p-1) + t**(q-1) = sigma``; it lies between the
    roots of ``max(t**(p-1), t**(q-1)) = sigma/2`` and ``= sigma``, which
    brackets a per-node geometric search.
    """
    rng10 = _log10_range(_dual(p), _dual(q), 24.0)
    lsig = np.linspace(*rng10, _TABLE_NODES) * math.log(10.0)
    sig = np.exp(lsig)

    def root(level):
        ll = np.log(level)
        return np.exp(np.minimum(ll / (p - 1.0), ll / (q - 1.0)))

    lo, hi = root(sig / 2.0) * 0.99, root(sig) * 1.01
    vals, _ = _bracketed_legendre(lambda t: t ** p / p + t ** q / q, sig, lo, hi)
    return CubicSpline(lsig, np.log(vals)), rng10


@lru_cache(maxsize=32)
def _reduced_biconjugate_table(p: float, q: float):
    """Brute-force Legendre transform of the tabulated ``phi1*`` (should reproduce ``phi1``)."""
    rng10 = _log10_range(p, q, 16.0)
    ltau = np.linspace(*rng10, _TABLE_NODES) * math.log(10.0)
    tau = np.exp(ltau)
    # the maximiser is phi1'(tau), between max(tau**(p-1), tau**(q-1)) and twice that
    top = np.maximum(tau ** (p - 1.0), tau ** (q - 1.0))
    lo, hi = top * 0.99, 2.0 * top * 1.01
    vals, _ = _bracketed_legendre(lambda s: _conjugate_values(p, q, np.ones(s.size), s.ravel()).reshape(s.shape), tau, lo, hi)
    return CubicSpline(ltau, np.log(vals)), rng10


def _bracketed_legendre(fun, s, lo, hi, nodes=65):
    frac = np.linspace(0.0, 1.0, nodes)
    tg = lo[:, None] * (hi / lo)[:, None] ** frac[None, :]
    vals = s[:, None] * tg - fun(tg)
    m = np.argmax(vals, axis=1)
    rows = np.arange(s.size)
    a = tg[rows, np.maximum(m - 1, 0)]
    b = tg[rows, np.minimum(m + 1, nodes - 1)]

    def g(t):
        return s * t - fun(t)

    t, v = _golden_max(g, a, b)
    return np.maximum(v, vals[rows, m]), t


def _bcast(a, t):
    return a if np.ndim(t) == 1 else a[:, None]


def _direct_conjugate(p, q, a, s):
    """Bracketed brute force of ``sup_t (s t - phi(a, t))`` for positive ``a, s``."""
    la = np.log(a)

    def t_at(level):
        # t where max(t**(p-1), a t**(q-1)) equals exp(level)
        return np.exp(np.minimum(level / (p - 1.0), (level - la) / (q - 1.0)))

    ls = np.log(s)
    lo, hi = t_at(ls - math.log(2.0)) * 0.99, t_at(ls) * 1.01
    vals, _ = _bracketed_legendre(lambda t: t ** p / p + _bcast(a, t) * t ** q / q, s, lo, hi)
    return vals


def _direct_biconjugate(p, q, a, t):
    """Bracketed brute force of ``sup_s (t s - phi*(a, s))``; the maximiser is ``phi'(a, t)``."""
    top = np.maximum(t ** (p - 1.0), a * t ** (q - 1.0))
    vals, _ = _bracketed_legendre(
        lambda s: _conjugate_values(p, q, np.broadcast_to(_bcast(a, s), np.shape(s)).ravel(), s.ravel()).reshape(
            np.shape(s)
        ),
        t,
        top * 0.99,
        2.0 * top * 1.01,
    )
    return vals


def _scaled(table, direct, p, q, a, x, x_power, out_power):
    """``a**out_power * F(x a**x_power)`` with ``F`` tabulated; off-table points go to ``direct``."""
    spline, (lo10, hi10) = table
    out = np.zeros(x.shape)
    pos = x > 0
    if not np.any(pos):
        return out
    ap, xp = a[pos], x[pos]
    la = np.log(ap)
    lx = np.log(xp) + x_power * la
    inside = (lx >= lo10 * math.log(10.0)) & (lx <= hi10 * math.log(10.0))
    vals = np.empty(xp.shape)
    vals[inside] = np.exp(out_power * la[inside] + spline(lx[inside]))
    if np.any(~inside):
        vals[~inside] = direct(p, q, ap[~inside], xp[~inside])
    out[pos] = vals
    return out


def _conjugate_values(p, q, a, s):
    return _scaled(_reduced_conjugate_table(p, q), _direct_conjugate, p, q, a, s, (p - 1.0) / (q - p), -p / (q - p))


def _biconjugate_values(p, q, a, t):
    return _scaled(_reduced_biconjugate_table(p, q), _direct_biconjugate, p, q, a, t, 1.0 / (q - p), -p / (q - p))


@dataclass(frozen=True, eq=False)
class ConjugateNFunction(_Model):
    """Brute-force conjugate ``phi*``; Simonenko indices ``q'`` and ``p'``."""

    base: NFunction

    @property
    def lower(self):
        return _dual(self.base.q)

    @property
    def upper(self):
        return _dual(self.base.p)

    @property
    def name(self) -> str:
        return "phi*"

    def phi(self, a, s):
        p, q = self.base.p, self.base.q
        a, s = np.broadcast_arrays(np.asarray(a, float), np.asarray(s, float))
        out = np.array(s ** _dual(p) / _dual(p), dtype=float)
        pos = a > 0
        if np.any(pos):
            ap, sp = a[pos], s[pos]
            out[pos] = _conjugate_values(p, q, ap, sp)
        return out

    def conjugate(self, mode=None):
        return Biconjugate(self.base)

    def describe(self):
        return {"conjugate_of": self.base.describe()}


@dataclass(frozen=True, eq=False)
class Biconjugate(_Model):
    """Numerical ``(phi*)*``: a brute-force Legendre transform of the tabulated conjugate."""

    base: NFunction

    @property
    def lower(self):
        return self.base.p

    @property
    def upper(self):
        return self.base.q

    @property
    def name(self) -> str:
        return "phi**"

    def phi(self, a, t):
        p, q = self.base.p, self.base.q
        a, t = np.broadcast_arrays(np.asarray(a, float), np.asarray(t, float))
        out = np.array(t ** p / p, dtype=float)
        pos = a > 0
        if np.any(pos):
            ap, tp = a[pos], t[pos]
            out[pos] = _biconjugate_values(p, q, ap, tp)
        return out

    def conjugate(self, mode=None):
        return ConjugateNFunction(self.base)


@dataclass(frozen=True, eq=False)
class ClosedFormConjugate(_Model):
    """``min(s**p'/p', a**(1-q') s**q')``, equivalent to ``phi*`` up to constants in ``p, q``."""

    base: NFunction

    @property
    def lower(self):
        return _dual(self.base.q)

    @property
    def upper(self):
        return _dual(self.base.p)

    @property
    def name(self) -> str:
        return "phi*~"

    def phi(self, a, s):
        return _closed_form_conjugate(self.base.p, self.base.q, a, s)


@dataclass(frozen=True, eq=False)
class PowerComposed(_Model):
    """``psi(x, t) = phi(x, t**theta)``; convex only when ``p * theta > 1``."""

    base: NFunction
    theta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise InputError("theta must be positive")

    @property
    def lower(self):
        return self.base.p * self.theta

    @property
    def upper(self):
        return self.base.q * self.theta

    @property
    def nonconvex(self) -> bool:
        return self.base.p * self.theta <= 1.0

    @property
    def name(self) -> str:
        return f"psi_({self.theta:g})"

    def phi(self, a, t):
        return self.base.phi(a, np.asarray(t, float) ** self.theta)

    def describe(self):
        return {"theta": self.theta, "of": self.base.describe()}


def power_compose(nf: NFunction, theta: float) -> PowerComposed:
    return PowerComposed(nf, theta)


# -- averaged N-functions -------------------------------------------------------


@dataclass(frozen=True)
class AveragedNFunction:
    """``t -> t**p/p + abar t**q/q``: the cube average of ``phi(., t)``.

    ``table`` holds 512 geometric nodes for export; evaluation uses the exact
    formula and :meth:`inverse` bisects it inside the table bracket.
    """

    p: float
    q: float
    abar: float
    table_t: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.table_t is None:
            object.__setattr__(self, "table_t", np.geomspace(1e-8, 1e8, 512))

    def __call__(self, t):
        t = np.asarray(t, float)
        return t ** self.p / self.p + self.abar * t ** self.q / self.q

    @property
    def table(self) -> np.ndarray:
        return np.stack([self.table_t, self(self.table_t)], axis=-1)

    def inverse(self, y, rtol: float = 1e-15):
        """Monotone bisection for ``t`` with ``self(t) = y`` (``y >= 0``)."""
        y = np.atleast_1d(np.asarray(y, float))
        if np.any(y < 0):
            raise InputError("inverse needs y >= 0")
        # phi(t) >= t**p/p and phi(t) >= abar t**q/q bound the root from above
        hi = (self.p * y) ** (1.0 / self.p)
        if self.abar > 0:
            hi = np.minimum(hi, (self.q * y / self.abar) ** (1.0 / self.q))
        hi = np.maximum(hi, 1e-300) * (1 + 1e-12)
        lo = np.zeros_like(y)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            big = self(mid) > y
            hi = np.where(big, mid, hi)
            lo = np.where(big, lo, mid)
            if np.all(hi - lo <= rtol * hi):
                break
        out = 0.5 * (lo + hi)
        out[y == 0] = 0.0
        return out if out.size > 1 else float(out[0])


def averaged_nfunction(nf: NFunction, cube: Cube, grid: Grid) -> AveragedNFunction:
    """Average of ``phi(., t)`` over ``cube`` by the midpoint rule on ``grid``."""
    if not cube.inside(grid):
        raise DomainError("cube leaves the grid box")
    cells = cube.cells(grid)
    if cells.size == 0:
        raise DomainError("cube contains no grid cell")
    abar = float(np.mean(nf.coefficient(grid).ravel()[cells]))
    return AveragedNFunction(nf.p, nf.q, abar)


def averaged_over(nf: NFunction, a_values: np.ndarray) -> AveragedNFunction:
    """Averaged function from an explicit set of coefficient samples (e.g. a ball)."""
    return AveragedNFunction(nf.p, nf.q, float(np.mean(a_values)))
