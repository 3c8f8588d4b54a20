"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Intended for desk-scale problems (a few hundred rows and columns) and as an
independent cross-check of the sparse HiGHS backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _standardize(c, A_ub, b_ub, A_eq, b_eq, bounds):
    """Rewrite variables with arbitrary bounds as nonnegative ones: x = T y + offset."""
    n = c.size
    cols, offset, ub_rows = [], np.zeros(n), []
    k = 0
    for j in range(n):
        lo, hi = bounds[j]
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, k, 1.0))
            if np.isfinite(hi):
                ub_rows.append((k, hi - lo))
            k += 1
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, k, -1.0))
            k += 1
        else:
            cols.append((j, k, 1.0))
            cols.append((j, k + 1, -1.0))
            k += 2
    T = np.zeros((n, k))
    for j, kk, v in cols:
        T[j, kk] = v
    rows_le, rhs_le = [], []
    if A_ub is not None and A_ub.shape[0]:
        rows_le.append(A_ub @ T)
        rhs_le.append(b_ub - A_ub @ offset)
    if ub_rows:
        B = np.zeros((len(ub_rows), k))
        for r, (kk, u) in enumerate(ub_rows):
            B[r, kk] = 1.0
        rows_le.append(B)
        rhs_le.append(np.array([u for _, u in ub_rows]))
    A1 = np.vstack(rows_le) if rows_le else np.zeros((0, k))
    b1 = np.concatenate(rhs_le) if rhs_le else np.zeros(0)
    if A_eq is not None and A_eq.shape[0]:
        A2, b2 = A_eq @ T, b_eq - A_eq @ offset
    else:
        A2, b2 = np.zeros((0, k)), np.zeros(0)
    return T, offset, A1, b1, A2, b2


class _Tableau:
    def __init__(self, A, b, basis, tol):
        self.A = A
        self.b = b
        self.basis = basis
        self.tol = tol
        self.iterations = 0

    def pivot(self, r, e):
        A, b = self.A, self.b
        piv = A[r, e]
        A[r] /= piv
        b[r] /= piv
        col = A[:, e].copy()
        col[r] = 0.0
        nz = np.flatnonzero(np.abs(col) > 0)
        A[nz] -= np.outer(col[nz], A[r])
        b[nz] -= col[nz] * b[r]
        A[nz, e] = 0.0
        self.basis[r] = e
        self.iterations += 1

    def run(self, cost, allowed, max_iter):
        """Maximize cost @ z over the current tableau; Bland's rule for entering and leaving."""
        tol = self.tol
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            cb = cost[self.basis]
            reduced = cost - cb @ self.A
            cand = np.flatnonzero((reduced > tol) & allowed)
            if cand.size == 0:
                return OPTIMAL
            e = int(cand[0])
            col = self.A[:, e]
            pos = np.flatnonzero(col > tol)
            if pos.size == 0:
                return UNBOUNDED
            ratios = self.b[pos] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * max(1.0, abs(best))]
            r = int(ties[np.argmin(np.asarray(self.basis)[ties])])
            self.pivot(r, e)


def simplex_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
                tol: float = 1e-9, max_iter: int = 50_000) -> SimplexResult:
    """Maximize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq`` and bounds.

    ``bounds`` is a list of ``(lo, hi)`` pairs with ``None`` for infinite; the
    default is ``x >= 0``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = None if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    A_eq = None if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_ub = None if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = None if b_eq is None else np.asarray(b_eq, dtype=float)
    bounds = [(0.0, None)] * n if bounds is None else list(bounds)

    T, offset, A1, b1, A2, b2 = _standardize(c, A_ub, b_ub, A_eq, b_eq, bounds)
    k = T.shape[1]
    m1, m2 = A1.shape[0], A2.shape[0]
    m = m1 + m2

    # columns: structural k | slacks m1 | artificials
    A = np.zeros((m, k + m1))
    A[:m1, :k] = A1
    A[:m1, k:] = np.eye(m1)
    A[m1:, :k] = A2
    b = np.concatenate([b1, b2])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    needs_art = np.ones(m, dtype=bool)
    needs_art[:m1] = neg[:m1]
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    A = np.hstack([A, np.zeros((m, n_art))])
    basis = list(range(k, k + m1)) + [0] * m2
    for a, r in enumerate(art_rows):
        A[r, k + m1 + a] = 1.0
        basis[r] = k + m1 + a
    ncol = A.shape[1]
    tab = _Tableau(A, b, basis, tol)

    if n_art:
        cost1 = np.zeros(ncol)
        cost1[k + m1:] = -1.0
        status = tab.run(cost1, np.ones(ncol, dtype=bool), max_iter)
        if status == ITERATION_LIMIT:
            return SimplexResult(status, None, None, tab.iterations)
        infeas = -float(cost1[tab.basis] @ tab.b)
        if infeas > tol * max(1.0, float(np.abs(b).max(initial=0.0))):
            return SimplexResult(INFEASIBLE, None, None, tab.iterations)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= k + m1:
                row = np.abs(tab.A[r, :k + m1])
                j = np.flatnonzero(row > tol)
                if j.size:
                    tab.pivot(r, int(j[0]))
                else:
                    keep[r] = False
        if not keep.all():
            tab.A, tab.b = tab.A[keep], tab.b[keep]
            tab.basis = [bv for bv, kk in zip(tab.basis, keep) if kk]
    allowed = np.zeros(ncol, dtype=bool)
    allowed[:k + m1] = True
    cost2 = np.zeros(ncol)
    cost2[:k] = T.T @ c
    status = tab.run(cost2, allowed, max_iter)
    if status != OPTIMAL:
        return SimplexResult(status, None, None, tab.iterations)
    z = np.zeros(ncol)
    z[tab.basis] = tab.b
    x = T @ z[:k] + offset
    return SimplexResult(OPTIMAL, x, float(c @ x), tab.iterations)
