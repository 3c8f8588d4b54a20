"""Exact LP formulations for optimal private-signal mechanisms and BIC/DSIC auctions.

Variables live only on positive-mass cells (profiles); zero-mass cells carry
x = p = 0 by convention.  IC rows are written in mass form, i.e. multiplied
through by the deviating type's probability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .auctions import MultiBidderInstance, MultiMechanism
from .core import SignalPricingInstance
from .errors import SizeCapExceeded, SolverFailure
from .mechanisms import Mechanism
from .modes import IC, IR, ConstraintMode, Payments, DEFAULT_MODE
from .simplex import simplex_max

log = logging.getLogger(__name__)

DEFAULT_CELL_CAP = 5000
DEFAULT_PROFILE_CAP = 5000

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"
UNBOUNDED = "Unbounded"


@dataclass
class LpResult:
    status: str
    z: np.ndarray | None
    objective: float | None
    duals: np.ndarray | None = None


@dataclass
class LpSolution:
    mechanism: object
    objective: float
    status: str
    mode: ConstraintMode
    certificate: np.ndarray | None = None
    backend: str = "highs"


# --- backends -----------------------------------------------------------------

def _equilibrate(c, A_ub, bounds, col_scale):
    """Substitute z = D y and scale every row to unit max-abs coefficient."""
    D = np.ones(len(bounds)) if col_scale is None else np.asarray(col_scale, dtype=float)
    A = sp.csr_array(A_ub) @ sp.diags_array(D)
    rmax = abs(A).max(axis=1).toarray().ravel() if A.shape[0] else np.zeros(0)
    R = np.where(rmax > 0, 1.0 / np.where(rmax > 0, rmax, 1.0), 1.0)
    A = sp.diags_array(R) @ A
    sb = [(None if lo is None else lo / d, None if hi is None else hi / d) for (lo, hi), d in zip(bounds, D)]
    return np.asarray(c, dtype=float) * D, sp.csr_array(A), R, D, sb


def solve_lp(c, A_ub, b_ub, bounds, backend: str = "highs", tol: float = 1e-10,
             col_scale=None) -> LpResult:
    """Maximize ``c @ z`` s.t. ``A_ub z <= b_ub`` and bounds (list of (lo, hi), None = infinite).

    ``col_scale`` is a positive per-variable unit; payments are best expressed
    in units of the bidder's value, which keeps the coefficient range narrow
    enough for the solver's tolerances to mean something.
    """
    cs, A, R, D, sb = _equilibrate(c, A_ub, bounds, col_scale)
    b = np.asarray(b_ub, dtype=float) * R
    if backend == "highs":
        res = linprog(-cs, A_ub=A, b_ub=b, bounds=sb, method="highs",
                      options={"primal_feasibility_tolerance": tol,
                               "dual_feasibility_tolerance": tol, "presolve": True})
        status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, "Failure")
        if status != OPTIMAL:
            return LpResult(status, None, None)
        duals = None
        if getattr(res, "ineqlin", None) is not None:
            duals = -np.asarray(res.ineqlin.marginals) * R
        return LpResult(OPTIMAL, res.x * D, -res.fun, duals)
    if backend == "simplex":
        res = simplex_max(cs, A.toarray(), b, bounds=sb, tol=max(tol, 1e-9))
        status = {"optimal": OPTIMAL, "infeasible": INFEASIBLE, "unbounded": UNBOUNDED,
                  "iteration_limit": ITERATION_LIMIT}[res.status]
        if status != OPTIMAL:
            return LpResult(status, None, None)
        return LpResult(OPTIMAL, res.x * D, res.objective)
    raise ValueError(f"unknown LP backend {backend!r}")


class _Rows:
    """Accumulates sparse ``<= 0`` rows."""

    def __init__(self, nvar: int):
        self.nvar = nvar
        self.r, self.c, self.v = [], [], []
        self.n = 0

    def add_block(self, row_ids, col_ids, vals):
        row_ids = np.asarray(row_ids).ravel()
        self.r.append(row_ids + self.n)
        self.c.append(np.asarray(col_ids).ravel())
        self.v.append(np.asarray(vals, dtype=float).ravel())

    def close(self, count: int):
        self.n += count

    def matrix(self):
        if not self.r:
            return sp.csr_array((0, self.nvar))
        r = np.concatenate(self.r)
        c = np.concatenate(self.c)
        v = np.concatenate(self.v)
        keep = v != 0
        return sp.csr_array((v[keep], (r[keep], c[keep])), shape=(self.n, self.nvar))


# --- single buyer ---------------------------------------------------------------

def single_buyer_program(inst: SignalPricingInstance, mode: ConstraintMode = DEFAULT_MODE,
                         cell_cap: int = DEFAULT_CELL_CAP):
    """Build (c, A_ub, b_ub, bounds, cells) for the single-buyer program."""
    m = inst.mass
    t = inst.values
    ii, jj = np.nonzero(m > 0)
    nc = ii.size
    if nc > cell_cap:
        raise SizeCapExceeded(f"{nc} positive cells exceed the cap of {cell_cap}")
    cell = np.full(m.shape, -1)
    cell[ii, jj] = np.arange(nc)
    mc = m[ii, jj]
    X = lambda k: k  # noqa: E731
    P = lambda k: nc + k  # noqa: E731
    rows = _Rows(2 * nc)
    ft = inst.type_marginal
    types = np.flatnonzero(ft > 0)

    if mode.ic is IC.BAYESIAN:
        for a in types:
            sig = np.flatnonzero(m[a] > 0)
            wa = m[a, sig]
            others = types[types != a]
            K = others.size
            if K == 0:
                continue
            own = cell[a, sig]
            # -(t_a x(a,s) - p(a,s)) on every row
            rid = np.repeat(np.arange(K), sig.size)
            rows.add_block(rid, np.tile(X(own), K), np.tile(-t[a] * wa, K))
            rows.add_block(rid, np.tile(P(own), K), np.tile(wa, K))
            dev = cell[np.ix_(others, sig)]
            ok = dev >= 0
            rr = np.nonzero(ok)[0]
            ww = np.broadcast_to(wa, dev.shape)[ok]
            rows.add_block(rr, X(dev[ok]), t[a] * ww)
            rows.add_block(rr, P(dev[ok]), -ww)
            rows.close(K)
    else:
        # a report whose cell has no mass meets x = p = 0, so truth must be worth >= 0 there
        exposed = np.flatnonzero((m[ii, jj] > 0) & ((m[:, jj] == 0).sum(axis=0) > 0)) if nc else []
        if len(exposed):
            k = np.asarray(exposed)
            rid = np.arange(k.size)
            rows.add_block(rid, X(k), -t[ii[k]])
            rows.add_block(rid, P(k), np.ones(k.size))
            rows.close(k.size)
        for j in range(inst.n_signals):
            live = np.flatnonzero(m[:, j] > 0)
            L = live.size
            if L < 2:
                continue
            a, b = np.meshgrid(live, live, indexing="ij")
            off = a != b
            a, b = a[off], b[off]
            w = m[a, j]
            rid = np.arange(a.size)
            ca, cb = cell[a, j], cell[b, j]
            rows.add_block(rid, X(cb), t[a] * w)
            rows.add_block(rid, P(cb), -w)
            rows.add_block(rid, X(ca), -t[a] * w)
            rows.add_block(rid, P(ca), w)
            rows.close(a.size)

    if mode.ir is IR.EXPOST:
        k = np.arange(nc)
        rows.add_block(k, X(k), -t[ii])
        rows.add_block(k, P(k), np.ones(nc))
        rows.close(nc)
    else:
        rid = np.searchsorted(types, ii)
        rows.add_block(rid, X(np.arange(nc)), -t[ii] * mc)
        rows.add_block(rid, P(np.arange(nc)), mc)
        rows.close(types.size)

    A = rows.matrix()
    b = np.zeros(A.shape[0])
    c = np.concatenate([np.zeros(nc), mc])
    plo = 0.0 if mode.payments is Payments.NONNEG else None
    bounds = [(0.0, 1.0)] * nc + [(plo, None)] * nc
    return c, A, b, bounds, (ii, jj)


def solve_single_buyer(inst: SignalPricingInstance, mode: ConstraintMode = DEFAULT_MODE,
                       backend: str = "highs", cell_cap: int = DEFAULT_CELL_CAP) -> LpSolution:
    """Revenue-optimal mechanism under the given IC / IR / payment-sign constraints."""
    c, A, b, bounds, (ii, jj) = single_buyer_program(inst, mode, cell_cap)
    t = inst.values[ii]
    res = solve_lp(c, A, b, bounds, backend, col_scale=np.concatenate([np.ones(ii.size), t]))
    if res.status != OPTIMAL:
        raise SolverFailure(f"single-buyer LP ({mode.label()}) ended with status {res.status}")
    nc = ii.size
    x = np.zeros(inst.mass.shape)
    p = np.zeros(inst.mass.shape)
    x[ii, jj] = np.clip(res.z[:nc], 0.0, 1.0)
    p[ii, jj] = res.z[nc:]
    if mode.payments is Payments.NONNEG:
        p[ii, jj] = np.maximum(p[ii, jj], 0.0)
    return LpSolution(Mechanism(x, p), float(res.objective), OPTIMAL, mode, res.duals, backend)


# --- multiple bidders -------------------------------------------------------------

def multi_bidder_program(minst: MultiBidderInstance, mode: ConstraintMode = DEFAULT_MODE,
                         profile_cap: int = DEFAULT_PROFILE_CAP, restrict_to_winner: bool = False):
    n = minst.n
    if n > 3:
        raise SizeCapExceeded("at most 3 bidders are supported")
    mass = minst.pmf
    flat = mass.ravel()
    prof = np.flatnonzero(flat > 0)
    nP = prof.size
    if nP > profile_cap:
        raise SizeCapExceeded(f"{nP} positive profiles exceed the cap of {profile_cap}")
    pid = np.full(flat.size, -1)
    pid[prof] = np.arange(nP)
    idx = np.array(np.unravel_index(prof, minst.dims))  # (n, nP)
    strides = np.array([int(np.prod(minst.dims[k + 1:])) for k in range(n)])
    w = flat[prof]
    nv = 2 * n * nP
    X = lambda i, k: i * nP + k  # noqa: E731
    P = lambda i, k: n * nP + i * nP + k  # noqa: E731
    rows = _Rows(nv)

    # feasibility: sum_i x_i <= 1 (rhs handled below)
    k = np.arange(nP)
    for i in range(n):
        rows.add_block(k, X(i, k), np.ones(nP))
    rows.close(nP)
    n_feas = nP

    for i in range(n):
        t = minst.grids[i].points
        ti = idx[i]
        ut = t[ti]
        if mode.ic is IC.BAYESIAN:
            fa = np.bincount(ti, weights=w, minlength=t.size)
            types = np.flatnonzero(fa > 0)
            for a in types:
                own = np.flatnonzero(ti == a)
                others = types[types != a]
                K = others.size
                if K == 0:
                    continue
                wa = w[own]
                rid = np.repeat(np.arange(K), own.size)
                rows.add_block(rid, np.tile(X(i, own), K), np.tile(-t[a] * wa, K))
                rows.add_block(rid, np.tile(P(i, own), K), np.tile(wa, K))
                dflat = prof[own][None, :] + (others - a)[:, None] * strides[i]
                dev = pid[dflat]
                ok = dev >= 0
                rr = np.nonzero(ok)[0]
                ww = np.broadcast_to(wa, dev.shape)[ok]
                rows.add_block(rr, X(i, dev[ok]), t[a] * ww)
                rows.add_block(rr, P(i, dev[ok]), -ww)
                rows.close(K)
        else:
            exposed = np.zeros(nP, dtype=bool)
            for ap in range(t.size):
                exposed |= (ti != ap) & (pid[prof + (ap - ti) * strides[i]] < 0)
            src = np.flatnonzero(exposed)
            if src.size:
                rid = np.arange(src.size)
                rows.add_block(rid, X(i, src), -ut[src])
                rows.add_block(rid, P(i, src), np.ones(src.size))
                rows.close(src.size)
            for ap in range(t.size):
                dflat = prof + (ap - ti) * strides[i]
                dev = pid[dflat]
                ok = (ti != ap) & (dev >= 0)
                src = np.flatnonzero(ok)
                if src.size == 0:
                    continue
                d = dev[ok]
                ws = w[src]
                rid = np.arange(src.size)
                rows.add_block(rid, X(i, d), ut[src] * ws)
                rows.add_block(rid, P(i, d), -ws)
                rows.add_block(rid, X(i, src), -ut[src] * ws)
                rows.add_block(rid, P(i, src), ws)
                rows.close(src.size)
        if mode.ir is IR.EXPOST:
            rows.add_block(k, X(i, k), -ut)
            rows.add_block(k, P(i, k), np.ones(nP))
            rows.close(nP)
        else:
            types = np.unique(ti)
            rid = np.searchsorted(types, ti)
            rows.add_block(rid, X(i, k), -ut * w)
            rows.add_block(rid, P(i, k), w)
            rows.close(types.size)

    A = rows.matrix()
    b = np.zeros(A.shape[0])
    b[:n_feas] = 1.0
    c = np.concatenate([np.zeros(n * nP), np.tile(w, n)])
    plo = 0.0 if mode.payments is Payments.NONNEG else None
    xb = []
    win = minst.winner.ravel()[prof]
    for i in range(n):
        hi = np.where(win == i, 1.0, 0.0) if restrict_to_winner else np.ones(nP)
        xb.extend((0.0, float(h)) for h in hi)
    bounds = xb + [(plo, None)] * (n * nP)
    return c, A, b, bounds, prof


def solve_multi_bidder(minst: MultiBidderInstance, mode: ConstraintMode = DEFAULT_MODE,
                       backend: str = "highs", profile_cap: int = DEFAULT_PROFILE_CAP,
                       restrict_to_winner: bool = False) -> LpSolution:
    """Optimal BIC or DSIC auction; ``restrict_to_winner`` forces x_i = 0 off the highest bidder."""
    c, A, b, bounds, prof = multi_bidder_program(minst, mode, profile_cap, restrict_to_winner)
    idx = np.unravel_index(prof, minst.dims)
    unit = np.concatenate([np.maximum(minst.grids[i].points[idx[i]], 1e-300) for i in range(minst.n)])
    res = solve_lp(c, A, b, bounds, backend, col_scale=np.concatenate([np.ones(unit.size), unit]))
    if res.status != OPTIMAL:
        raise SolverFailure(f"multi-bidder LP ({mode.label()}) ended with status {res.status}")
    n, nP = minst.n, prof.size
    x = np.zeros((n, minst.pmf.size))
    p = np.zeros_like(x)
    zx = res.z[:n * nP].reshape(n, nP)
    zp = res.z[n * nP:].reshape(n, nP)
    x[:, prof] = np.clip(zx, 0.0, 1.0)
    p[:, prof] = np.maximum(zp, 0.0) if mode.payments is Payments.NONNEG else zp
    shape = (n,) + minst.dims
    return LpSolution(MultiMechanism(x.reshape(shape), p.reshape(shape)), float(res.objective),
                      OPTIMAL, mode, res.duals, backend)
