"""Single-buyer mechanisms, the two closed-form gap constructions and an IC/IR auditor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .core import SignalPricingInstance, example2_instance
from .errors import InvalidDomain, InvalidH, ShapeMismatch, WrongInstanceShape
from .modes import IC, IR, ConstraintMode, Payments, DEFAULT_MODE


@dataclass(frozen=True)
class Mechanism:
    """Allocation ``x`` and payment ``p`` over (value, signal) cells.

    Both are dense arrays or sparse arrays aligned with the instance grid and
    signal ordering.  Negative payments are allowed.
    """

    x: object
    p: object

    def __post_init__(self):
        if self.x.shape != self.p.shape:
            raise ShapeMismatch(f"x {self.x.shape} vs p {self.p.shape}")
        xd = self.x.data if sp.issparse(self.x) else np.asarray(self.x)
        if xd.size and (np.min(xd) < -1e-12 or np.max(xd) > 1 + 1e-12):
            raise ShapeMismatch("allocations must lie in [0, 1]")

    @property
    def shape(self):
        return self.x.shape

    def dense(self) -> "Mechanism":
        if sp.issparse(self.x) or sp.issparse(self.p):
            return Mechanism(_dense(self.x), _dense(self.p))
        return self


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


@dataclass(frozen=True)
class AuditReport:
    revenue: float
    max_bic_violation: float
    max_expost_ir_violation: float
    max_interim_ir_violation: float
    min_payment: float
    worst_deviation: tuple | None
    max_dsic_violation: float | None = None
    off_support_entries: int = 0
    value_scale: float = 1.0

    @property
    def payment_sign_violation(self) -> float:
        return max(0.0, -self.min_payment)

    def ic_violation(self, mode: ConstraintMode) -> float:
        if mode.ic is IC.DOMINANT:
            return self.max_dsic_violation if self.max_dsic_violation is not None else math.inf
        return self.max_bic_violation

    def passes(self, mode: ConstraintMode = DEFAULT_MODE, tol: float = 1e-9, relative: bool = False) -> bool:
        """Check every constraint of ``mode``; ``relative`` multiplies ``tol`` by ``value_scale``."""
        if relative:
            tol = tol * self.value_scale
        ir = self.max_expost_ir_violation if mode.ir is IR.EXPOST else self.max_interim_ir_violation
        ok = self.ic_violation(mode) <= tol and ir <= tol
        if mode.payments is Payments.NONNEG:
            ok = ok and self.payment_sign_violation <= tol
        return ok

    def to_dict(self) -> dict:
        return {
            "revenue": self.revenue,
            "max_bic_violation": self.max_bic_violation,
            "max_dsic_violation": self.max_dsic_violation,
            "max_expost_ir_violation": self.max_expost_ir_violation,
            "max_interim_ir_violation": self.max_interim_ir_violation,
            "min_payment": self.min_payment,
            "worst_deviation": list(self.worst_deviation) if self.worst_deviation else None,
            "off_support_entries": self.off_support_entries,
            "value_scale": self.value_scale,
        }


def utility_matrix(inst: SignalPricingInstance, mech: Mechanism) -> np.ndarray:
    """U[t, t'] = E[t * x(t', s) - p(t', s) | t] for types with positive mass (NaN rows otherwise)."""
    m = inst.mass
    ft = inst.type_marginal
    t = inst.values
    x, p = _dense(mech.x), _dense(mech.p)
    cond = np.zeros_like(m)
    pos = ft > 0
    cond[pos] = m[pos] / ft[pos, None]
    u = t[:, None] * (cond @ x.T) - cond @ p.T
    u[~pos] = np.nan
    return u


def audit_mechanism(inst: SignalPricingInstance, mech: Mechanism, tol: float = 1e-9,
                    mode: ConstraintMode = DEFAULT_MODE) -> AuditReport:
    """Worst-case IC gain, IR slack and payment sign over on-grid misreports.

    IC gains are per unit of type mass and reported raw (clamped at 0); use
    ``AuditReport.passes`` to compare against a tolerance.  Entries of x or p
    larger than ``tol`` on zero-mass cells are counted in ``off_support_entries``.
    """
    if mech.shape != (inst.n_values, inst.n_signals):
        raise ShapeMismatch(f"mechanism {mech.shape} vs instance {(inst.n_values, inst.n_signals)}")
    m = inst.mass
    t = inst.values
    x, p = _dense(mech.x), _dense(mech.p)
    pos_cell = m > 0
    revenue = float(np.sum(m * p))

    u = utility_matrix(inst, mech)
    rows = np.flatnonzero(inst.type_marginal > 0)
    truth = np.diag(u)[rows]
    gains = u[rows] - truth[:, None]
    k = np.unravel_index(np.argmax(gains), gains.shape)
    bic = max(0.0, float(gains[k]))
    worst = (float(t[rows[k[0]]]), float(t[k[1]])) if bic > 0 else None

    cell_u = t[:, None] * x - p
    expost = max(0.0, float(np.max(-cell_u[pos_cell]))) if pos_cell.any() else 0.0
    ft = inst.type_marginal
    interim_u = np.sum(m * cell_u, axis=1)[rows] / ft[rows]
    interim = max(0.0, float(np.max(-interim_u))) if rows.size else 0.0
    min_pay = float(np.min(p[pos_cell])) if pos_cell.any() else 0.0

    dsic = None
    if mode.ic is IC.DOMINANT:
        dsic = 0.0
        for j in range(inst.n_signals):
            live = np.flatnonzero(pos_cell[:, j])
            if live.size == 0:
                continue
            own = t[live, None] * x[None, :, j] - p[None, :, j]
            g = own - cell_u[live, j][:, None]
            dsic = max(dsic, float(np.max(g)))

    off = int(np.count_nonzero((np.abs(x) > tol) & ~pos_cell) + np.count_nonzero((np.abs(p) > tol) & ~pos_cell))
    return AuditReport(revenue, bic, expost, interim, min_pay, worst, dsic, off,
                       value_scale=float(max(1.0, t.max(), np.abs(p).max(initial=0.0))))


# --- gap construction with negative payments ---------------------------------

def g_example(z: float, H: float, y_grid=None) -> float:
    """max over y in [1, H] of ln(y) (z - y) / ln(H).

    The objective is concave in y, so the interior maximizer solves
    y (ln y + 1) = z.  Grid candidates are evaluated as well, which keeps the
    returned value at least the best on-grid deviation payoff.
    """
    if not z >= 1.0 or not H > math.e:
        raise InvalidDomain(f"need z >= 1 and H > e, got z={z!r}, H={H!r}")
    lnH = math.log(H)
    best = 0.0  # y = 1
    hi = min(z, H)
    if hi > 1.0:
        foc = lambda v: v * (math.log(v) + 1.0) - z  # noqa: E731
        # stationary point beyond H: the concave objective is still rising at H
        y = hi if foc(hi) <= 0 else brentq(foc, 1.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        y = min(max(y, 1.0), H)
        best = max(best, math.log(y) * (z - y) / lnH)
    if y_grid is not None:
        ys = np.asarray(y_grid, dtype=float)
        ys = ys[(ys >= 1.0) & (ys <= H)]
        if ys.size:
            best = max(best, float(np.max(np.log(ys) / lnH * (z - ys))))
    return best


def _require_family(inst: SignalPricingInstance, family: str):
    if inst.meta.get("family") != family:
        raise WrongInstanceShape(f"expected an instance built by {family}_instance")


def example1_mechanism(inst: SignalPricingInstance) -> Mechanism:
    """Sell with probability ln v / ln H at full value under '*', rebate on matching signals."""
    _require_family(inst, "example1")
    H = inst.meta["H"]
    lnH = math.log(H)
    t = inst.values
    n = t.size
    m = inst.mass
    x = np.zeros((n, n + 1))
    p = np.zeros((n, n + 1))
    alloc = np.log(t) / lnH
    x[:, 0] = alloc
    p[:, 0] = t * alloc
    ratio = m[:, 0] / m[np.arange(n), np.arange(n) + 1]
    # deviation payoffs use the same product as the auditor so the rebate covers them exactly
    for i, v in enumerate(t):
        dev = float(np.max(v * alloc - p[:, 0]))
        p[i, i + 1] = -ratio[i] * max(g_example(v, H, t), dev)
    return Mechanism(x, p)


def example1_revenue_bound(H: float, eps: float) -> float:
    """(1 - eps)(ln ln H - 2), the analytic revenue guarantee of the rebate mechanism."""
    if not H > math.exp(math.e):
        raise InvalidH(f"H must exceed e^e, got {H!r}")
    return (1.0 - eps) * (math.log(math.log(H)) - 2.0)


# --- gap construction with interleaved supports ------------------------------

def example2_mechanism(inst: SignalPricingInstance) -> Mechanism:
    """Always sell at a third of the report when the report is in the signal's support."""
    _require_family(inst, "example2")
    pmf = sp.csc_array(inst.pmf)
    x = sp.csc_array((np.ones_like(pmf.data), pmf.indices, pmf.indptr), shape=pmf.shape)
    vals = inst.values[pmf.indices]
    p = sp.csc_array((vals / 3.0, pmf.indices, pmf.indptr), shape=pmf.shape)
    return Mechanism(x, p)


@dataclass(frozen=True)
class Example2TypeAudit:
    value: Fraction
    prob: Fraction
    truthful_utility: Fraction
    best_deviation_utility: Fraction
    best_deviation: Fraction | None


@dataclass(frozen=True)
class Example2Audit:
    m_levels: int
    types: tuple
    expected_value: Fraction
    revenue: Fraction
    drev: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.revenue / self.drev

    @property
    def truthful_exact(self) -> bool:
        return all(r.truthful_utility == Fraction(2, 3) * r.value for r in self.types)

    @property
    def max_deviation_ratio(self) -> Fraction:
        """max over types of best deviation utility / value."""
        return max(r.best_deviation_utility / r.value for r in self.types)

    @property
    def ic_holds(self) -> bool:
        return all(r.best_deviation_utility <= r.truthful_utility for r in self.types)


_EX2_Z = (Fraction(1, 3) + Fraction(1, 4)) / 2


def example2_symmetry_audit(m_levels: int) -> Example2Audit:
    """Exact IC audit of the interleaved-support mechanism without enumerating signals.

    Given value v = 3k + b, coordinate k of s equals b and the joint weight is
    proportional to 1/v - 1/(3(k+1) + s_{k+1}) (or 1/v at the top level).  So
    coordinate k+1 is tilted and every other coordinate stays a fair coin.
    A report in level j wins iff s_j matches its bit.
    """
    m = m_levels
    if not 2 <= m <= 64:
        raise InvalidDomain("m_levels out of range")
    rows = []
    ev = Fraction(0)

    def nxt(k, d):
        return Fraction(1, 3 * (k + 1) + d)

    for k in range(1, m + 1):
        for b in (0, 1):
            v = Fraction(3 * k + b)
            if k < m:
                w = [1 / v - nxt(k, d) for d in (0, 1)]
                prob = (w[0] + w[1]) / 2 / (2 * _EX2_Z)
            else:
                w = None
                prob = 1 / v / (2 * _EX2_Z)
            best, arg = Fraction(0), None
            for j in range(1, m + 1):
                for d in (0, 1):
                    rep = Fraction(3 * j + d)
                    if rep == v:
                        continue
                    if j == k:
                        q = Fraction(0)
                    elif j == k + 1:
                        q = w[d] / (w[0] + w[1])
                    else:
                        q = Fraction(1, 2)
                    util = q * (v - rep / 3)
                    if arg is None or util > best:
                        best, arg = util, rep
            rows.append(Example2TypeAudit(v, prob, v - v / 3, best, arg))
            ev += v * prob
    return Example2Audit(m, tuple(rows), ev, ev / 3, 1 / _EX2_Z)


def example2_enumeration_audit(m_levels: int) -> dict:
    """Brute-force counterpart over all 2^m signals (small m only).

    Returns value -> (truthful utility, best deviation utility) as floats.
    """
    inst = example2_instance(m_levels)
    u = utility_matrix(inst, example2_mechanism(inst))
    t = inst.values
    out = {}
    for i, v in enumerate(t):
        row = u[i].copy()
        truth = row[i]
        row[i] = -np.inf
        out[float(v)] = (float(truth), float(np.max(row)))
    return out
