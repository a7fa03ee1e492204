"""Modulars, Luxemburg norms, Hölder pairings and discrete gradients of grid fields.

``model`` arguments are any object with ``phi(a, t)``, ``lower``/``upper``
indices and ``coefficient(grid)``: an :class:`~doublephase.nfunc.NFunction`,
its conjugate or a power composition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import Domain, GridField
from .nfunc import BRUTE_FORCE

__all__ = [
    "modular",
    "luxemburg_norm",
    "luxemburg_batch",
    "dual_norm",
    "holder_pairing",
    "HolderCheck",
    "check_holder",
    "norm_conjugate_lower_bound",
    "Gradient",
    "discrete_gradient",
]

RHO_TOL = 1e-10
WIDTH_TOL = 1e-12


def _domain(f: GridField, D: Domain | None) -> Domain:
    if D is None:
        return Domain(f.grid)
    if not D.grid.same_as(f.grid):
        raise InputError("field and domain live on different grids")
    return D


def modular(model, f: GridField, D: Domain | None = None) -> float:
    """Midpoint rule for ``int_D phi(x, |f(x)|) dx``."""
    D = _domain(f, D)
    a = D.restrict(model.coefficient(f.grid))
    vals = np.abs(D.restrict(f.values))
    return float(np.sum(model.phi(a, vals)) * f.grid.cell_volume)


def luxemburg_batch(model, a, values, item_ids, n_items: int, cell_volume: float) -> np.ndarray:
    """Luxemburg norms of many functions sharing one coefficient sample.

    Item ``i`` is the function taking ``values[k]`` on the cells ``k`` with
    ``item_ids[k] == i`` (coefficient ``a[k]``) and zero elsewhere.  Each norm
    is found by bisection in ``log(lambda)`` inside the bracket given by the
    index sandwich ``rho(f) min(l**-p, l**-q) <= rho(f/l) <= rho(f) max(...)``.
    """
    a = np.asarray(a, float)
    v = np.abs(np.asarray(values, float))
    ids = np.asarray(item_ids, dtype=np.intp)
    if not np.all(np.isfinite(v)):
        raise InputError("field contains non-finite values")
    lo_idx, up_idx = float(model.lower), float(model.upper)

    def rho(lam_per_item):
        t = v / lam_per_item[ids]
        return np.bincount(ids, weights=model.phi(a, t), minlength=n_items) * cell_volume

    rho1 = rho(np.ones(n_items))
    out = np.zeros(n_items)
    live = rho1 > 0
    if not np.any(live):
        return out
    r = np.where(live, rho1, 1.0)
    big = r >= 1.0
    llo = np.where(big, np.log(r) / up_idx, np.log(r) / lo_idx)
    lhi = np.where(big, np.log(r) / lo_idx, np.log(r) / up_idx)
    # widen by a hair so rounding in the sandwich never excludes the root
    llo -= 1e-9
    lhi += 1e-9
    done = ~live
    lam = np.exp(0.5 * (llo + lhi))
    for _ in range(200):
        mid = 0.5 * (llo + lhi)
        lam = np.exp(mid)
        val = rho(np.where(done, 1.0, lam))
        hit = np.abs(val - 1.0) <= RHO_TOL
        above = val > 1.0
        llo = np.where(~done & above & ~hit, mid, llo)
        lhi = np.where(~done & ~above & ~hit, mid, lhi)
        newly = ~done & (hit | (np.exp(lhi) - np.exp(llo) <= WIDTH_TOL * lam))
        out[newly] = np.where(hit[newly], lam[newly], np.exp(0.5 * (llo + lhi))[newly])
        done |= newly
        if np.all(done):
            break
    return out


def luxemburg_norm(model, f: GridField, D: Domain | None = None) -> float:
    """``inf{lambda > 0 : rho(|f| / lambda) <= 1}`` over the masked cells."""
    D = _domain(f, D)
    vals = D.restrict(f.values)
    a = D.restrict(model.coefficient(f.grid))
    ids = np.zeros(vals.size, dtype=np.intp)
    return float(luxemburg_batch(model, a, vals, ids, 1, f.grid.cell_volume)[0])


def dual_norm(nf, g: GridField, D: Domain | None = None, mode=BRUTE_FORCE) -> float:
    """Luxemburg norm with respect to the conjugate function (brute force by default)."""
    return luxemburg_norm(nf.conjugate(mode), g, D)


def holder_pairing(nf, f: GridField, g: GridField, D: Domain | None = None) -> float:
    """Midpoint rule for ``int_D |f| |g| dx``."""
    if not f.grid.same_as(g.grid):
        raise InputError("f and g live on different grids")
    D = _domain(f, D)
    return float(np.sum(np.abs(D.restrict(f.values) * D.restrict(g.values))) * f.grid.cell_volume)


@dataclass(frozen=True)
class HolderCheck:
    pairing: float
    norm_f: float
    dual_norm_g: float

    @property
    def bound(self) -> float:
        return 2.0 * self.norm_f * self.dual_norm_g

    def holds(self, rtol: float = 1e-8) -> bool:
        return self.pairing <= self.bound * (1.0 + rtol)


def check_holder(nf, f: GridField, g: GridField, D: Domain | None = None) -> HolderCheck:
    """Compare the pairing with ``2 ||f||_phi ||g||_phi*``."""
    return HolderCheck(holder_pairing(nf, f, g, D), luxemburg_norm(nf, f, D), dual_norm(nf, g, D))


def norm_conjugate_lower_bound(nf, f: GridField, D: Domain | None = None, *, seed: int = 0, extra: int = 8):
    """Largest pairing of ``f`` with candidates normalised to unit dual norm.

    Candidates are ``phi'(x, |f|/||f||)`` (the Young-equality profile), powers
    of ``|f|`` and a few seeded random positive fields.  The result sits below
    ``2 ||f||_phi`` and, for a good family, close to ``||f||_phi``.
    """
    D = _domain(f, D)
    nrm = luxemburg_norm(nf, f, D)
    if nrm == 0:
        return 0.0, nrm
    a = nf.coefficient(f.grid)
    base = np.abs(f.values) / nrm
    cands = [nf.dphi(a, base)]
    for k in (0.5, 1.0, 2.0):
        cands.append(base ** k)
    rng = np.random.default_rng(seed)
    for _ in range(extra):
        cands.append(rng.random(f.grid.dims) * (1.0 + base))
    best = 0.0
    for c in cands:
        g = GridField(f.grid, c)
        dn = dual_norm(nf, g, D)
        if dn > 0:
            best = max(best, holder_pairing(nf, f, g, D) / dn)
    return best, nrm


# -- gradients -----------------------------------------------------------------


@dataclass(frozen=True)
class Gradient:
    """Per-axis derivative samples and the pointwise magnitude ``|grad u|``."""

    components: tuple[GridField, ...]
    magnitude: GridField


def discrete_gradient(u: GridField) -> Gradient:
    """Face differences averaged to cell centres; one-sided in the boundary cells."""
    g = u.grid
    if any(d < 2 for d in g.dims):
        raise InputError("discrete gradient needs at least two cells per axis")
    comps = np.gradient(u.values, g.h, edge_order=1)
    if g.n == 1:
        comps = [comps]
    mag = np.sqrt(sum(c * c for c in comps))
    return Gradient(tuple(GridField(g, c) for c in comps), GridField(g, mag))
