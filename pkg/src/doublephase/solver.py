"""Dirichlet minimisation of the discrete double phase energy and regularity diagnostics.

Values live on the cell centres of a grid whose outermost layer holds the
Dirichlet data.  The energy is the P1 (piecewise linear) energy over the Kuhn
split of each lattice box into ``n!`` simplices, so the integration domain is
the convex hull of the centres.  :func:`node_grid` builds a grid whose centres
sit exactly on a closed box.  For ``p = 2`` and ``a = 0`` the stiffness matrix
is the standard ``2n + 1`` point Laplacian.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DomainError, InputError, PreconditionError
from .fields import discrete_gradient
from .grid import Domain, Grid, GridField, ball, read_field, write_field
from .nfunc import NFunction, averaged_over
from .poincare import normalise_gradient

__all__ = [
    "OPTIMIZERS",
    "DEFAULT_SCHEDULE",
    "node_grid",
    "boundary_mask",
    "SolveConfig",
    "Solution",
    "energy",
    "energy_gradient",
    "weak_residual",
    "residual_norm",
    "minimize",
    "caccioppoli_check",
    "caccioppoli_sweep",
    "linfty_check",
    "linfty_sweep",
    "RegularityDiagnostics",
    "holder_diagnostic",
    "save_checkpoint",
    "load_checkpoint",
]

OPTIMIZERS = ("GradientDescentArmijo", "NonlinearCG", "DampedNewton")
DEFAULT_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
ARMIJO_C1 = 1e-4
ARMIJO_SHRINK = 0.5
MAX_SHRINKS = 60


def node_grid(lower, upper, cells: int) -> Grid:
    """Grid with ``cells + 1`` centres per axis placed on ``lower + k h``."""
    lower = tuple(float(v) for v in lower)
    upper = tuple(float(v) for v in upper)
    widths = {round(u - l, 12) for l, u in zip(lower, upper)}
    if len(widths) != 1 or min(widths) <= 0:
        raise InputError("node_grid needs a cube with positive side")
    h = (upper[0] - lower[0]) / cells
    return Grid((cells + 1,) * len(lower), tuple(l - h / 2 for l in lower), h)


def boundary_mask(grid: Grid) -> np.ndarray:
    m = np.zeros(grid.dims, dtype=bool)
    for k in range(grid.n):
        idx = [slice(None)] * grid.n
        idx[k] = 0
        m[tuple(idx)] = True
        idx[k] = -1
        m[tuple(idx)] = True
    return m


# -- configuration ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SolveConfig:
    """Minimisation problem and optimiser settings.

    ``boundary`` is a full grid field; only its outer layer is used as data.
    ``initial`` is ``"mean"`` (interior set to the mean boundary value),
    ``"boundary"`` (interior copied from ``boundary``) or a grid field.
    """

    nf: NFunction
    boundary: GridField
    eps_schedule: tuple[float, ...] = DEFAULT_SCHEDULE
    optimizer: str = "NonlinearCG"
    tol_energy: float = 1e-12
    tol_residual: float = 1e-8
    max_iter: int = 20000
    precondition: bool = True
    initial: object = "mean"

    def __post_init__(self):
        if not isinstance(self.nf, NFunction):
            raise InputError("the solver needs an NFunction model")
        if self.optimizer not in OPTIMIZERS:
            raise InputError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        sched = tuple(float(e) for e in self.eps_schedule)
        if not sched or min(sched) < 0 or any(b >= a for a, b in zip(sched, sched[1:])):
            raise InputError("eps_schedule must be non-empty, non-negative and strictly decreasing")
        object.__setattr__(self, "eps_schedule", sched)
        if not (self.tol_energy > 0 and self.tol_residual > 0):
            raise InputError("tolerances must be positive")
        if int(self.max_iter) < 1:
            raise InputError("max_iter must be at least 1")
        if any(d < 3 for d in self.grid.dims):
            raise InputError("the solver needs at least three cells per axis")
        if isinstance(self.initial, GridField):
            if not self.initial.grid.same_as(self.grid):
                raise InputError("initial guess lives on another grid")
        elif self.initial not in ("mean", "boundary"):
            raise InputError("initial must be 'mean', 'boundary' or a GridField")
        if self.optimizer == "DampedNewton" and self.nf.p < 2 and self.eps_floor == 0:
            raise InputError("DampedNewton with p < 2 needs a positive regularisation floor")

    @property
    def grid(self) -> Grid:
        return self.boundary.grid

    @property
    def eps_floor(self) -> float:
        return self.eps_schedule[-1]

    def start(self) -> np.ndarray:
        bd = boundary_mask(self.grid)
        if isinstance(self.initial, GridField):
            v = self.initial.values.copy()
        elif self.initial == "boundary":
            v = self.boundary.values.copy()
        else:
            v = np.full(self.grid.dims, float(np.mean(self.boundary.values[bd])))
        v[bd] = self.boundary.values[bd]
        return v

    def to_dict(self) -> dict:
        g = self.grid
        bd = boundary_mask(g)
        init = self.initial
        if isinstance(init, GridField):
            init = "field:" + hashlib.sha256(init.values.tobytes()).hexdigest()[:16]
        return {
            "model": self.nf.describe(),
            "grid": {"dims": list(g.dims), "origin": list(g.origin), "spacing": g.h},
            "boundarySha256": hashlib.sha256(self.boundary.values[bd].tobytes()).hexdigest(),
            "epsSchedule": list(self.eps_schedule),
            "optimizer": self.optimizer,
            "tolEnergy": self.tol_energy,
            "tolResidual": self.tol_residual,
            "maxIter": int(self.max_iter),
            "precondition": self.precondition,
            "initial": init,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# -- Kuhn mesh ---------------------------------------------------------------------


@lru_cache(maxsize=None)
def _paths(n: int):
    """Vertex offsets ``w_0 .. w_n`` of each Kuhn simplex, plus the axis stepped at each edge."""
    out = []
    for perm in itertools.permutations(range(n)):
        w = [(0,) * n]
        for ax in perm:
            nxt = list(w[-1])
            nxt[ax] = 1
            w.append(tuple(nxt))
        out.append((tuple(w), perm))
    return tuple(out)


def _shifted(arr: np.ndarray, off) -> np.ndarray:
    return arr[tuple(slice(o, o + d - 1) for o, d in zip(off, arr.shape))]


class _Mesh:
    def __init__(self, grid: Grid, a: np.ndarray):
        self.grid = grid
        self.n = grid.n
        self.h = grid.h
        self.vol = grid.h ** grid.n / math.factorial(grid.n)
        self.paths = _paths(grid.n)
        a = np.asarray(a, float).reshape(grid.dims)
        self.a = [np.mean([_shifted(a, w) for w in ws], axis=0) for ws, _ in self.paths]

    def edge_diffs(self, v):
        out = []
        for ws, _ in self.paths:
            out.append([(_shifted(v, ws[k + 1]) - _shifted(v, ws[k])) / self.h for k in range(self.n)])
        return out

    def scatter(self, coeffs) -> np.ndarray:
        """Adjoint of :meth:`edge_diffs`."""
        g = np.zeros(self.grid.dims)
        for (ws, _), cs in zip(self.paths, coeffs):
            for k, c in enumerate(cs):
                _shifted(g, ws[k + 1])[...] += c / self.h
                _shifted(g, ws[k])[...] -= c / self.h
        return g


def _reg(gsq, eps):
    """``rho = sqrt(|g|^2 + eps^2)`` and ``t = rho - eps`` without cancellation."""
    rho = np.sqrt(gsq + eps * eps)
    return rho, gsq / (rho + eps) if eps > 0 else rho


def _energy_terms(nf, mesh: _Mesh, v, eps, want_grad: bool):
    E = 0.0
    coeffs = []
    for a, g in zip(mesh.a, mesh.edge_diffs(v)):
        gsq = sum(c * c for c in g)
        rho, t = _reg(gsq, eps)
        E += float(np.sum(nf.phi(a, t)))
        if want_grad:
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.where(rho > 0, nf.dphi(a, t) / rho, 0.0)
            coeffs.append([mesh.vol * w * c for c in g])
    E *= mesh.vol
    return (E, mesh.scatter(coeffs)) if want_grad else (E, None)


def _pow_diff(t0, dt, p):
    """``(t0 + dt)**p - t0**p`` accurate even when ``dt`` is tiny against ``t0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(t0 > 0, dt / np.where(t0 > 0, t0, 1.0), 0.0)
        out = np.where(t0 > 0, t0 ** p * np.expm1(p * np.log1p(rel)), np.maximum(t0 + dt, 0.0) ** p)
    return out


def _energy_delta(nf, mesh: _Mesh, v, dv, alpha, eps) -> float:
    """``E(v + alpha dv) - E(v)`` summed per simplex from exact differences, free of cancellation."""
    total = 0.0
    p, q = nf.p, nf.q
    for a, g, dg in zip(mesh.a, mesh.edge_diffs(v), mesh.edge_diffs(dv)):
        gsq0 = sum(c * c for c in g)
        dgsq = sum(alpha * d * (2 * c + alpha * d) for c, d in zip(g, dg))
        rho0, t0 = _reg(gsq0, eps)
        rho1 = np.sqrt(np.maximum(gsq0 + dgsq, 0.0) + eps * eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = np.where(rho0 + rho1 > 0, dgsq / (rho0 + rho1), 0.0)
        total += float(np.sum(_pow_diff(t0, dt, p) / p + a * _pow_diff(t0, dt, q) / q))
    return total * mesh.vol


def _assemble(mesh: _Mesh, weights) -> sp.csr_matrix:
    """Sparse ``sum_S vol B_S^T (w2 g g^T + w1 I) B_S`` from per-simplex ``(w1, w2, g)``."""
    n = mesh.n
    idx = np.arange(mesh.grid.size).reshape(mesh.grid.dims)
    rows, cols, vals = [], [], []
    for (ws, _), (w1, w2, g) in zip(mesh.paths, weights):
        nodes = [_shifted(idx, w).ravel() for w in ws]
        for k in range(n):
            for l in range(n):
                hkl = mesh.vol / mesh.h ** 2 * (w2 * g[k] * g[l] + (w1 if k == l else 0.0))
                hkl = np.broadcast_to(hkl, _shifted(idx, ws[0]).shape).ravel()
                for i, si in ((nodes[k + 1], 1.0), (nodes[k], -1.0)):
                    for j, sj in ((nodes[l + 1], 1.0), (nodes[l], -1.0)):
                        rows.append(i)
                        cols.append(j)
                        vals.append(si * sj * hkl)
    N = mesh.grid.size
    H = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return H.tocsr()


def _hessian(nf, mesh: _Mesh, v, eps) -> sp.csr_matrix:
    p, q = nf.p, nf.q
    weights = []
    for a, g in zip(mesh.a, mesh.edge_diffs(v)):
        gsq = sum(c * c for c in g)
        rho, t = _reg(gsq, eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            w1 = np.where(rho > 0, nf.dphi(a, t) / rho, 0.0)
            d2 = (p - 1) * t ** (p - 2) + a * (q - 1) * t ** (q - 2)
            w2 = np.where(gsq > 0, (d2 - w1) / (rho * rho), 0.0)
        weights.append((w1, w2, g))
    return _assemble(mesh, weights)


@lru_cache(maxsize=16)
def _laplacian_factor(dims, n):
    g = Grid(dims, (0.0,) * n, 1.0)
    mesh = _Mesh(g, np.zeros(dims))
    zeros = [0.0] * n
    H = _assemble(mesh, [(1.0, 0.0, zeros)] * len(mesh.paths))
    inner = ~boundary_mask(g).ravel()
    return splu(H[inner][:, inner].tocsc())


def _mesh(cfg: SolveConfig) -> _Mesh:
    return _Mesh(cfg.grid, cfg.nf.coefficient(cfg.grid))


def _check_boundary(cfg: SolveConfig, v: GridField):
    if not v.grid.same_as(cfg.grid):
        raise InputError("field lives on another grid")
    bd = boundary_mask(cfg.grid)
    if not np.array_equal(v.values[bd], cfg.boundary.values[bd]):
        raise PreconditionError("field does not match the Dirichlet data")


def energy(cfg: SolveConfig, v: GridField, eps: float | None = None) -> float:
    """Discrete energy with ``|grad v|`` replaced by ``sqrt(|grad v|^2 + eps^2) - eps``."""
    _check_boundary(cfg, v)
    eps = cfg.eps_floor if eps is None else float(eps)
    return _energy_terms(cfg.nf, _mesh(cfg), v.values, eps, False)[0]


def energy_gradient(cfg: SolveConfig, v: GridField, eps: float | None = None) -> np.ndarray:
    """Derivative of :func:`energy` with respect to every cell value (boundary included)."""
    if not v.grid.same_as(cfg.grid):
        raise InputError("field lives on another grid")
    eps = cfg.eps_floor if eps is None else float(eps)
    return _energy_terms(cfg.nf, _mesh(cfg), v.values, eps, True)[1]


def weak_residual(cfg: SolveConfig, v: GridField, psi: GridField, eps: float | None = None) -> float:
    """Flux pairing ``int (phi'(|Dv|)/|Dv|) Dv . Dpsi`` for a test field vanishing on the boundary."""
    if not psi.grid.same_as(cfg.grid):
        raise InputError("test field lives on another grid")
    if np.any(psi.values[boundary_mask(cfg.grid)] != 0):
        raise PreconditionError("test field must vanish on the boundary cells")
    return float(np.sum(energy_gradient(cfg, v, eps) * psi.values))


def residual_norm(cfg: SolveConfig, v: GridField, eps: float | None = None) -> float:
    """Largest pairing with an interior hat function, divided by the hat's mass ``h**n``."""
    gr = energy_gradient(cfg, v, eps)
    inner = ~boundary_mask(cfg.grid)
    return float(np.max(np.abs(gr[inner]))) / cfg.grid.cell_volume


# -- minimisation -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Solution:
    u: GridField
    cfg: SolveConfig
    energy: float = math.nan
    residual: float = math.nan
    iterations: int = 0
    converged: bool = False
    log: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "configHash": self.cfg.config_hash(),
            "energy": self.energy,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def minimize(cfg: SolveConfig) -> Solution:
    """Continuation over ``cfg.eps_schedule``, warm-starting each level from the last.

    Every accepted step satisfies the Armijo condition on an exactly summed
    energy difference.  Within one level the logged energy never increases and
    each step's ``decrease`` is positive, which stays visible after the steps
    fall below one ulp of the energy.  Intermediate levels stop once the
    residual drops below ``max(tol_residual, eps)``; the floor level needs both
    the residual and the energy decrease under their tolerances.
    """
    g = cfg.grid
    inner = ~boundary_mask(g)
    flat = inner.ravel()
    mesh = _mesh(cfg)
    v = cfg.start()
    hv = g.cell_volume
    lu = _laplacian_factor(g.dims, g.n) if cfg.precondition and cfg.optimizer != "DampedNewton" else None
    # the unit-spacing Laplacian factor scales like h**(n-2)
    pscale = g.h ** (2 - g.n)

    def precond(r):
        return pscale * lu.solve(r) if lu is not None else r

    def f_and_g(x, eps, grad=True):
        w = v.copy()
        w[inner] = x
        E, G = _energy_terms(cfg.nf, mesh, w, eps, grad)
        return E, (G[inner] if grad else None)

    log = []
    total = 0
    x = v[inner].copy()
    E, G = f_and_g(x, cfg.eps_schedule[0])
    res = float(np.max(np.abs(G))) / hv if G.size else 0.0
    converged = False
    for level, eps in enumerate(cfg.eps_schedule):
        floor = level == len(cfg.eps_schedule) - 1
        tol_res = cfg.tol_residual if floor else max(cfg.tol_residual, eps)
        E, G = f_and_g(x, eps)
        res = float(np.max(np.abs(G))) / hv if G.size else 0.0
        log.append({"eps": eps, "iter": total, "energy": E, "decrease": 0.0, "residual": res, "step": 0.0})
        if G.size == 0 or (res <= tol_res and not floor):
            continue
        PG = precond(G)
        d = -PG
        alpha_prev = 1.0
        while total < cfg.max_iter:
            if cfg.optimizer == "DampedNewton":
                w = v.copy()
                w[inner] = x
                H = _hessian(cfg.nf, mesh, w, eps)[flat][:, flat].tocsc()
                shift = 1e-12 * float(abs(H.diagonal()).max() or 1.0)
                d = -splu((H + shift * sp.identity(H.shape[0], format="csc")).tocsc()).solve(G)
            gd = float(G @ d)
            if not gd < 0:
                d = -PG
                gd = float(G @ d)
            if lu is None and cfg.optimizer != "DampedNewton":
                alpha = 2.0 * alpha_prev
            else:
                alpha = 1.0
            dv = np.zeros(g.dims)
            dv[inner] = d
            w = v.copy()
            w[inner] = x
            accepted = False
            for _ in range(MAX_SHRINKS):
                dE = _energy_delta(cfg.nf, mesh, w, dv, alpha, eps)
                if dE <= ARMIJO_C1 * alpha * gd and dE < 0:
                    accepted = True
                    break
                alpha *= ARMIJO_SHRINK
            if not accepted:
                break
            x = x + alpha * d
            total += 1
            alpha_prev = alpha
            dec = -dE
            E = E + dE
            G_old, PG_old = G, PG
            _, G = f_and_g(x, eps)
            res = float(np.max(np.abs(G))) / hv
            log.append({"eps": eps, "iter": total, "energy": E, "decrease": dec, "residual": res, "step": alpha})
            if res <= tol_res and (not floor or dec <= cfg.tol_energy * max(1.0, abs(E))):
                break
            PG = precond(G)
            if cfg.optimizer == "NonlinearCG":
                beta = max(0.0, float(G @ (PG - PG_old)) / float(G_old @ PG_old))
                d = -PG + beta * d
            else:
                d = -PG
        if floor:
            converged = res <= cfg.tol_residual
    v[inner] = x
    u = GridField(g, v)
    E = _energy_terms(cfg.nf, mesh, v, cfg.eps_floor, False)[0]
    return Solution(u, cfg, E, res, total, bool(converged), tuple(log))


# -- diagnostics ----------------------------------------------------------------------


def _solution_parts(sol):
    return sol.u, sol.cfg.nf


def caccioppoli_check(sol: Solution, Br: Domain, BR: Domain, lam: float):
    """``int_{B_r} phi(|grad u_lam|) / int_{B_R} phi(u_lam / (R - r))`` with ``u_lam = (u - lam)_+``.

    Returns ``None`` when the right side vanishes.
    """
    u, nf = _solution_parts(sol)
    if Br.radius is None or BR.radius is None or not Br.radius < BR.radius:
        raise InputError("need balls with r < R")
    if np.any(Br.cells & ~BR.cells):
        raise InputError("inner ball is not inside the outer one")
    g = u.grid
    a = nf.coefficient(g)
    ul = GridField(g, np.maximum(u.values - lam, 0.0))
    grad = discrete_gradient(ul).magnitude.values
    lhs = float(np.sum(Br.restrict(nf.phi(a, grad)))) * g.cell_volume
    rhs = float(np.sum(BR.restrict(nf.phi(a, ul.values / (BR.radius - Br.radius))))) * g.cell_volume
    if rhs == 0:
        return None
    return lhs / rhs


def caccioppoli_sweep(sol: Solution, center, pairs, quantiles=tuple(k / 10 for k in range(10))):
    """Ratios over ball pairs ``(r, R)`` and levels ``lam`` at fractions of ``u``'s range on ``B_R``."""
    rows = []
    g = sol.u.grid
    for r, R in pairs:
        Br, BR = ball(g, center, r), ball(g, center, R)
        vals = BR.restrict(sol.u.values)
        lo, hi = float(vals.min()), float(vals.max())
        for qk in quantiles:
            lam = lo + qk * (hi - lo)
            ratio = caccioppoli_check(sol, Br, BR, lam)
            rows.append({"r": r, "R": R, "lambda": lam, "ratio": ratio, "skipped": ratio is None})
    return rows


def linfty_check(sol: Solution, B: Domain) -> dict:
    """Local upper bound on ``B`` against the ``phi``-mean of ``(u - <u>_{2B})_+`` over ``2B``.

    ``u`` is first scaled so the gradient modular over ``2B`` is at most one.
    The left side uses the averaged function ``M_{2B} phi``; ``supRatio`` is
    the same comparison after applying its inverse.
    """
    u, nf = _solution_parts(sol)
    if B.center is None or B.radius is None:
        raise InputError("linfty_check needs a ball mask")
    r = B.radius
    B2 = ball(u.grid, B.center, 2 * r)
    v, scale = normalise_gradient(nf, u, B2)
    w = np.maximum(v.values - B2.mean(v.values), 0.0)
    a = nf.coefficient(u.grid)
    M = averaged_over(nf, B2.restrict(a))
    sup = float(np.max(B.restrict(w)))
    lhs = float(M(sup / r))
    rhs = float(np.mean(B2.restrict(nf.phi(a, w / r))))
    if rhs == 0:
        ratio = 0.0 if lhs == 0 else math.inf
        sup_ratio = ratio
    else:
        ratio = lhs / rhs
        sup_ratio = sup / (r * float(np.ravel(M.inverse(rhs))[0]))
    return {"center": list(B.center), "radius": r, "scale": scale, "lhs": lhs, "rhs": rhs,
            "ratio": ratio, "supRatio": sup_ratio}


def linfty_sweep(sol: Solution, center, radii) -> list[dict]:
    return [linfty_check(sol, ball(sol.u.grid, center, r)) for r in radii]


@dataclass(frozen=True)
class RegularityDiagnostics:
    center: tuple[float, ...]
    radii: tuple[float, ...]
    osc: tuple[float, ...]
    theta: tuple[float, ...]
    beta: float
    r2: float
    truncated: bool

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "radii": list(self.radii),
            "osc": list(self.osc),
            "theta": list(self.theta),
            "beta": self.beta,
            "r2": self.r2,
            "truncated": self.truncated,
        }


def holder_diagnostic(sol, center, r0: float, levels: int, floor: float | None = None) -> RegularityDiagnostics:
    """Oscillation over ``B(center, r0 4**-j)``, step ratios and a least-squares Hoelder exponent.

    The table stops early once an oscillation drops to ``floor`` (the solver
    tolerance by default).  ``sol`` may be a :class:`Solution` or a bare field.
    """
    u = sol.u if isinstance(sol, Solution) else sol
    if floor is None:
        floor = sol.cfg.tol_residual if isinstance(sol, Solution) else 0.0
    center = tuple(float(c) for c in center)
    radii, osc = [], []
    truncated = False
    for j in range(int(levels)):
        r = r0 * 4.0 ** (-j)
        try:
            B = ball(u.grid, center, r)
        except DomainError:
            if j == 0:
                raise
            truncated = True
            break
        vals = B.restrict(u.values)
        o = float(vals.max() - vals.min())
        if o <= floor:
            truncated = True
            break
        radii.append(r)
        osc.append(o)
    theta = tuple(b / a for a, b in zip(osc, osc[1:]))
    if len(osc) >= 2:
        X, Y = np.log(radii), np.log(osc)
        beta, c0 = np.polyfit(X, Y, 1)
        ss_res = float(np.sum((Y - (beta * X + c0)) ** 2))
        ss_tot = float(np.sum((Y - Y.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        beta, r2 = math.nan, math.nan
    return RegularityDiagnostics(center, tuple(radii), tuple(osc), theta, float(beta), float(r2), truncated)


# -- checkpoints -----------------------------------------------------------------------


def save_checkpoint(sol: Solution, stem) -> tuple[Path, Path]:
    """Write ``<stem>.field`` and ``<stem>.json``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    fpath, jpath = stem.with_suffix(".field"), stem.with_suffix(".json")
    write_field(fpath, sol.u)
    jpath.write_text(json.dumps(sol.to_dict(), indent=2, sort_keys=True) + "\n")
    return fpath, jpath


def load_checkpoint(stem) -> tuple[GridField, dict]:
    stem = Path(stem)
    return read_field(stem.with_suffix(".field")), json.loads(stem.with_suffix(".json").read_text())
