"""Lagrangian dual construction and the benchmark upper bounds built on it.

Fields are reported in density units (mass divided by cell width); their
cell-integrated counterparts ``G = width * g`` and ``H = width * h`` are what
the bounds sum.  Tail sums run over strictly larger grid values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .auctions import MultiBidderInstance, MultiMechanism
from .core import Mode, SignalPricingInstance, is_jointly_regular, joint_regularity_audit
from .errors import NegativeWeights, ShapeMismatch, WrongMode
from .mechanisms import Mechanism, _dense
from .modes import IC, IR, ConstraintMode, DEFAULT_MODE
from .pricing import drev

DEFAULT_DELTA = 0.05


def lambda_star(t, t_prime):
    """Continuous multiplier 2/t for t > 0 and t' <= t, zero otherwise."""
    t = np.asarray(t, dtype=float)
    tp = np.asarray(t_prime, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    out = np.where((t > 0) & (tp <= t), 2.0 / safe, 0.0)
    return float(out) if out.ndim == 0 else out


def _tail_strict(a: np.ndarray) -> np.ndarray:
    """Sum over strictly later rows (axis 0)."""
    c = np.cumsum(a[::-1], axis=0)[::-1]
    return c - a


def _require_quadrature(mode: Mode):
    if Mode(mode) is not Mode.QUADRATURE:
        raise WrongMode("dual fields need a quadrature-mode instance")


@dataclass(frozen=True)
class DualFields:
    """g, h in density units and their cell integrals G, H, shape (n_values, n_signals)."""

    g: np.ndarray
    h: np.ndarray
    widths: np.ndarray
    values: np.ndarray

    @property
    def G(self) -> np.ndarray:
        return self.widths[:, None] * self.g

    @property
    def H(self) -> np.ndarray:
        return self.widths[:, None] * self.h

    def bracket_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell integrals of [t g + h/2]_+ and [h]_+."""
        t = self.values[:, None]
        return np.maximum(t * self.G + 0.5 * self.H, 0.0), np.maximum(self.H, 0.0)


def _fields_from_mass(m: np.ndarray, t: np.ndarray, w: np.ndarray, vol: np.ndarray | float = 1.0):
    """Shared field algebra; ``vol`` is the measure of the conditioning cell (1 for signals)."""
    safe_t = np.where(t > 0, t, np.inf)[:, None]
    f = m / (w[:, None] * vol)
    g = -f + 2.0 * _tail_strict(m / safe_t) / vol
    h = 2.0 * t[:, None] * f - 2.0 * _tail_strict(m) / vol
    return g, h


def gh_fields(inst: SignalPricingInstance) -> DualFields:
    """g(t,s) = -f + 2 sum_{t'>t} mass(t',s)/t' and h(t,s) = 2 (t f - mass above t)."""
    _require_quadrature(inst.mode)
    g, h = _fields_from_mass(inst.mass, inst.values, inst.grid.widths)
    return DualFields(g, h, inst.grid.widths, inst.values)


@dataclass(frozen=True)
class SignalBound:
    signal: object
    pos_h: float
    pos_tg: float
    drev: float
    regular: bool
    delta: float

    @property
    def ratio_h(self) -> float:
        return self.pos_h / self.drev if self.drev > 0 else math.nan

    @property
    def ratio_tg(self) -> float:
        return self.pos_tg / self.drev if self.drev > 0 else math.nan

    @property
    def holds(self) -> bool:
        """Both per-signal inequalities within the grid slack."""
        slack = 1.0 + self.delta
        tiny = 1e-12 * max(1.0, self.drev)
        return (self.pos_h <= 2.0 * self.drev * slack + tiny
                and self.pos_tg <= self.drev * slack + tiny)

    def to_dict(self) -> dict:
        s = self.signal
        return {"signal": list(s) if isinstance(s, tuple) else s, "pos_h": self.pos_h,
                "pos_tg": self.pos_tg, "drev": self.drev, "ratio_h": self.ratio_h,
                "ratio_tg": self.ratio_tg, "regular": self.regular, "holds": self.holds}


@dataclass(frozen=True)
class BoundReport:
    lag2_total: float
    drev_total: float
    per_signal: list = field(default_factory=list)
    delta: float = DEFAULT_DELTA

    @property
    def factor(self) -> float:
        return self.lag2_total / self.drev_total if self.drev_total > 0 else math.inf

    @property
    def per_signal_sum(self) -> float:
        return float(sum(b.pos_h + b.pos_tg for b in self.per_signal))

    def to_dict(self) -> dict:
        return {"lag2_total": self.lag2_total, "drev_total": self.drev_total,
                "factor": self.factor, "delta": self.delta,
                "per_signal": [b.to_dict() for b in self.per_signal]}


def lagrangian_bound(inst: SignalPricingInstance, delta: float = DEFAULT_DELTA) -> BoundReport:
    """Sum over cells of [t G + H/2]_+ + [H]_+ with the per-signal split."""
    fields = gh_fields(inst)
    tg, hp = fields.bracket_terms()
    dr = drev(inst)
    regular = joint_regularity_audit(inst)
    per = []
    for j, s in enumerate(inst.signals):
        per.append(SignalBound(s, float(hp[:, j].sum()), float(tg[:, j].sum()),
                               float(dr.per_signal[j].contribution), bool(regular[s].is_regular)
                               if s in regular else False, delta))
    return BoundReport(float(tg.sum() + hp.sum()), float(dr.total), per, delta)


def per_signal_bounds(inst: SignalPricingInstance, delta: float = DEFAULT_DELTA) -> list:
    """Per-signal rows; the inequalities are only guaranteed on regular signals."""
    return lagrangian_bound(inst, delta).per_signal


@dataclass(frozen=True)
class PsiReport:
    psi: np.ndarray
    positive: np.ndarray
    contiguous: bool
    sign_changes: int


def psi_diagnostic(inst: SignalPricingInstance, s) -> PsiReport:
    """psi_s(t) = 2 sum_{t'>t} mass/t' - sum_{t'>t} mass / t and its positive set."""
    _require_quadrature(inst.mode)
    j = inst.signal_index(s)
    m = inst.column(j)
    t = inst.values
    safe = np.where(t > 0, t, np.inf)
    psi = 2.0 * _tail_strict(m / safe) - _tail_strict(m) / safe
    scale = max(1e-300, float(np.abs(psi).max(initial=0.0)))
    pos = np.flatnonzero(psi > 1e-12 * scale)
    contiguous = pos.size == 0 or (pos[-1] - pos[0] + 1 == pos.size)
    sgn = np.sign(np.where(np.abs(psi) > 1e-12 * scale, psi, 0.0))
    nz = sgn[sgn != 0]
    changes = int(np.count_nonzero(np.diff(nz))) if nz.size else 0
    return PsiReport(psi, pos, bool(contiguous), changes)


# --- Lagrangian evaluation -----------------------------------------------------

@dataclass(frozen=True)
class DualWeights:
    """Multipliers in mass form.

    ``lam`` is (n, n) for Bayesian IC (type t reporting t') or (S, n, n) for
    per-signal dominant-strategy IC.  ``mu`` is (n, S) for ex-post IR, weighting
    each cell's utility times its mass, or (n,) for interim IR.
    """

    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if np.any(lam < 0) or np.any(mu < 0) or not (np.all(np.isfinite(lam)) and np.all(np.isfinite(mu))):
            raise NegativeWeights("dual weights must be finite and nonnegative")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)


def canonical_weights(inst: SignalPricingInstance) -> DualWeights:
    """lambda*(t, t') = 2 width(t') / t for t' < t and mu* = [G]_+/mass + null-report weight.

    The null-report weight 2 - sum_{t'} lambda*(t, t') is the multiplier of the
    option to take nothing and pay nothing, folded into IR.  Cells without
    mass get mu* = 0.
    """
    _require_quadrature(inst.mode)
    t = inst.values
    w = inst.grid.widths
    safe = np.where(t > 0, t, np.inf)
    lam = np.tril(np.broadcast_to(2.0 * w[None, :] / safe[:, None], (t.size, t.size)), k=-1).copy()
    null = np.maximum(2.0 - lam.sum(axis=1), 0.0)
    G = gh_fields(inst).G
    m = inst.mass
    pos = m > 0
    mu = np.zeros_like(m)
    mu[pos] = (np.maximum(G, 0.0)[pos] / m[pos]) + np.broadcast_to(null[:, None], m.shape)[pos]
    return DualWeights(lam, mu)


def random_dual_weights(inst: SignalPricingInstance, mode: ConstraintMode, rng: np.random.Generator,
                        scale: float = 1.0) -> DualWeights:
    n, S = inst.n_values, inst.n_signals
    lam_shape = (n, n) if mode.ic is IC.BAYESIAN else (S, n, n)
    mu_shape = (n, S) if mode.ir is IR.EXPOST else (n,)
    return DualWeights(rng.exponential(scale, lam_shape), rng.exponential(scale, mu_shape))


def evaluate_lagrangian(inst: SignalPricingInstance, mech: Mechanism, weights: DualWeights) -> float:
    """Revenue plus weighted IC slacks plus weighted IR slacks, all in mass form."""
    m = inst.mass
    t = inst.values
    x, p = _dense(mech.x), _dense(mech.p)
    n, S = m.shape
    if x.shape != m.shape:
        raise ShapeMismatch("mechanism does not match the instance")
    lam, mu = weights.lam, weights.mu
    cell_u = t[:, None] * x - p
    total = float(np.sum(m * p))
    if lam.shape == (n, n):
        own = np.sum(m * cell_u, axis=1)
        dev = t[:, None] * (m @ x.T) - m @ p.T
        slack = own[:, None] - dev
        np.fill_diagonal(slack, 0.0)
        total += float(np.sum(lam * slack))
    elif lam.shape == (S, n, n):
        for j in range(S):
            dev = t[:, None] * x[None, :, j] - p[None, :, j]
            slack = m[:, j, None] * (cell_u[:, j, None] - dev)
            np.fill_diagonal(slack, 0.0)
            total += float(np.sum(lam[j] * slack))
    else:
        raise ShapeMismatch(f"lambda shape {lam.shape} fits neither IC form")
    if mu.shape == (n, S):
        total += float(np.sum(mu * m * cell_u))
    elif mu.shape == (n,):
        total += float(np.sum(mu * np.sum(m * cell_u, axis=1)))
    else:
        raise ShapeMismatch(f"mu shape {mu.shape} fits neither IR form")
    return total


def canonical_lagrangian_ceiling(inst: SignalPricingInstance) -> float:
    """sup over x in [0,1], p >= 0 of the Lagrangian at (lambda*, mu*).

    Equals the sum over mass-positive cells of [t [G]_+ + H]_+, which never
    exceeds ``lagrangian_bound(inst).lag2_total``.
    """
    fields = gh_fields(inst)
    pos = inst.mass > 0
    c = inst.values[:, None] * np.maximum(fields.G, 0.0) + fields.H
    return float(np.sum(np.maximum(c, 0.0)[pos]))


# --- multiple bidders ------------------------------------------------------------

@dataclass(frozen=True)
class MultiDualWeights:
    """Per-bidder multipliers on (n_i, R) views plus the feasibility weight per profile."""

    lam: tuple
    mu: tuple
    nu: np.ndarray

    def __post_init__(self):
        arrs = list(self.lam) + list(self.mu) + [np.asarray(self.nu)]
        if any(np.any(np.asarray(a) < 0) for a in arrs):
            raise NegativeWeights("dual weights must be nonnegative")


def random_multi_dual_weights(minst: MultiBidderInstance, mode: ConstraintMode, rng: np.random.Generator,
                              scale: float = 1.0) -> MultiDualWeights:
    lam, mu = [], []
    for i in range(minst.n):
        ni = minst.dims[i]
        R = minst.pmf.size // ni
        lam.append(rng.exponential(scale, (ni, ni) if mode.ic is IC.BAYESIAN else (ni, ni, R)))
        mu.append(rng.exponential(scale, (ni, R) if mode.ir is IR.EXPOST else (ni,)))
    return MultiDualWeights(tuple(lam), tuple(mu), rng.exponential(scale, minst.dims))


def evaluate_lagrangian_multi(minst: MultiBidderInstance, mech: MultiMechanism,
                              weights: MultiDualWeights) -> float:
    total = mech.revenue(minst)
    for i in range(minst.n):
        t = minst.grids[i].points
        M = minst.bidder_view(i)
        X = minst.bidder_view(i, mech.x[i])
        P = minst.bidder_view(i, mech.p[i])
        cu = t[:, None] * X - P
        lam, mu = weights.lam[i], weights.mu[i]
        if lam.ndim == 2:
            own = np.sum(M * cu, axis=1)
            dev = t[:, None] * (M @ X.T) - M @ P.T
            slack = own[:, None] - dev
            np.fill_diagonal(slack, 0.0)
            total += float(np.sum(lam * slack))
        else:
            # lam[a, b, r]: type a reporting b at opponent profile r
            dev = t[:, None, None] * X[None] - P[None]
            slack = M[:, None, :] * (cu[:, None, :] - dev)
            idx = np.arange(t.size)
            slack[idx, idx, :] = 0.0
            total += float(np.sum(lam * slack))
        total += float(np.sum(mu * M * cu)) if mu.ndim == 2 else float(np.sum(mu * np.sum(M * cu, axis=1)))
    total += float(np.sum(weights.nu * (1.0 - mech.x.sum(axis=0))))
    return total


@dataclass(frozen=True)
class MultiFields:
    """Per-bidder g_i, h_i in density units on the (n_i, R) bidder view, plus cell volumes."""

    g: tuple
    h: tuple
    f: tuple
    vol: tuple


def multibidder_gh(minst: MultiBidderInstance) -> MultiFields:
    _require_quadrature(minst.mode)
    gs, hs, fs, vols = [], [], [], []
    for i in range(minst.n):
        M = minst.bidder_view(i)
        w = minst.grids[i].widths
        opp = [minst.grids[k].widths for k in range(minst.n) if k != i]
        vol_opp = np.ones(1)
        for wk in opp:
            vol_opp = np.multiply.outer(vol_opp, wk).ravel()
        g, h = _fields_from_mass(M, minst.grids[i].points, w, vol_opp[None, :])
        gs.append(g)
        hs.append(h)
        fs.append(M / (w[:, None] * vol_opp[None, :]))
        vols.append(w[:, None] * vol_opp[None, :])
    return MultiFields(tuple(gs), tuple(hs), tuple(fs), tuple(vols))


def claim_dual_bound_check(minst: MultiBidderInstance) -> float:
    """max over (i, t) of [g_i t_i]_+ + h_i - 2 t_i f, relative to max(1, max 2 t_i f)."""
    fields = multibidder_gh(minst)
    worst = -math.inf
    for i in range(minst.n):
        t = minst.grids[i].points[:, None]
        g, h, f = fields.g[i], fields.h[i], fields.f[i]
        rhs = 2.0 * t * f
        gap = np.maximum(g * t, 0.0) + h - rhs
        worst = max(worst, float(gap.max() / max(1.0, float(rhs.max()))))
    return worst


@dataclass(frozen=True)
class LookaheadBound:
    second_price_term: float
    winner_term: float
    winner_term_by_bidder: tuple

    @property
    def total(self) -> float:
        return self.second_price_term + self.winner_term

    def to_dict(self) -> dict:
        return {"second_price_term": self.second_price_term, "winner_term": self.winner_term,
                "winner_term_by_bidder": list(self.winner_term_by_bidder), "total": self.total}


def lookahead_bound_terms(minst: MultiBidderInstance, mech: MultiMechanism | None = None) -> LookaheadBound:
    """2 E[secmax] plus the winner contribution over each bidder's region U_i.

    With ``mech`` the winner term weights each cell by x_i; without it the
    supremum over allocations is taken (positive part of the bracket), which
    makes ``total`` an upper bound on optimal BIC revenue.
    """
    from .auctions import second_price_revenue

    fields = multibidder_gh(minst)
    win = minst.winner
    by = []
    for i in range(minst.n):
        t = minst.grids[i].points[:, None]
        c = (np.maximum(fields.g[i] * t, 0.0) + fields.h[i]) * fields.vol[i]
        U = minst.bidder_view(i, win == i)
        if mech is None:
            by.append(float(np.sum(np.maximum(c, 0.0)[U])))
        else:
            X = minst.bidder_view(i, mech.x[i])
            by.append(float(np.sum((X * c)[U])))
    return LookaheadBound(2.0 * second_price_revenue(minst), float(sum(by)), tuple(by))
