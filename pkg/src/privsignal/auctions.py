"""Correlated multi-bidder single-item auctions: instances, second price, lookahead, lift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Mapping, Sequence

import numpy as np

from .core import DiscreteDist, Mode, SignalPricingInstance, ValueGrid, regularity_audit, SUM_TOL
from .errors import DimensionMismatch, InvalidEps, InvalidParams, NegativeMass, ShapeMismatch, SumNotOne
from .modes import IC, IR, ConstraintMode, Payments, DEFAULT_MODE
from .pricing import _best_price


@dataclass(frozen=True)
class MultiBidderInstance:
    """Joint mass over type profiles; axis i of ``pmf`` indexes bidder i's grid."""

    grids: tuple
    pmf: np.ndarray
    mode: Mode = Mode.MASS
    components: int = 1
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        grids = tuple(self.grids)
        pmf = np.array(self.pmf, dtype=float)
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))
        dims = tuple(len(g) for g in grids)
        if pmf.shape != dims:
            if pmf.size == math.prod(dims):
                pmf = pmf.reshape(dims)
            else:
                raise DimensionMismatch(f"pmf shape {pmf.shape} does not match grids {dims}")
        if np.any(pmf < 0):
            raise NegativeMass("negative probability mass")
        total = pmf.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise SumNotOne(f"masses sum to {total!r}")
        if abs(total - 1.0) > 1e-12:
            pmf = pmf / total
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    @property
    def n(self) -> int:
        return len(self.grids)

    @property
    def dims(self) -> tuple:
        return self.pmf.shape

    def values(self, i: int) -> np.ndarray:
        """Bidder i's values broadcast to the profile array shape."""
        shape = [1] * self.n
        shape[i] = -1
        return np.broadcast_to(self.grids[i].points.reshape(shape), self.dims)

    @cached_property
    def profile_values(self) -> np.ndarray:
        return np.stack([self.values(i) for i in range(self.n)])

    @cached_property
    def winner(self) -> np.ndarray:
        """Index of the highest bidder per profile; ties go to the lowest index."""
        return np.argmax(self.profile_values, axis=0)

    @cached_property
    def secmax(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros(self.dims)
        return np.sort(self.profile_values, axis=0)[-2]

    def cell_volume(self) -> np.ndarray:
        vol = np.ones(self.dims)
        for i, g in enumerate(self.grids):
            shape = [1] * self.n
            shape[i] = -1
            vol = vol * g.widths.reshape(shape)
        return vol

    def density(self) -> np.ndarray:
        return self.pmf / self.cell_volume()

    def bidder_view(self, i: int, a: np.ndarray | None = None) -> np.ndarray:
        """Move bidder i's axis first and flatten the opponents: shape (n_i, R)."""
        arr = self.pmf if a is None else a
        return np.moveaxis(arr, i, 0).reshape(self.dims[i], -1)


@dataclass(frozen=True)
class MultiMechanism:
    """Per-bidder allocations and payments, arrays of shape (n, *dims)."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if x.shape != p.shape:
            raise ShapeMismatch(f"x {x.shape} vs p {p.shape}")
        if x.size and (x.min() < -1e-9 or x.max() > 1 + 1e-9):
            raise ShapeMismatch("allocations must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    def revenue(self, minst: MultiBidderInstance) -> float:
        return float(np.sum(minst.pmf[None] * self.p))


@dataclass(frozen=True)
class MultiAuditReport:
    revenue: float
    max_bic_violation: float
    max_dsic_violation: float
    max_expost_ir_violation: float
    max_interim_ir_violation: float
    min_payment: float
    max_feasibility_excess: float

    def passes(self, mode: ConstraintMode = DEFAULT_MODE, tol: float = 1e-9) -> bool:
        ic = self.max_dsic_violation if mode.ic is IC.DOMINANT else self.max_bic_violation
        ir = self.max_expost_ir_violation if mode.ir is IR.EXPOST else self.max_interim_ir_violation
        ok = ic <= tol and ir <= tol and self.max_feasibility_excess <= tol
        if mode.payments is Payments.NONNEG:
            ok = ok and self.min_payment >= -tol
        return ok

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def audit_multi_mechanism(minst: MultiBidderInstance, mech: MultiMechanism,
                          all_profiles: bool = False) -> MultiAuditReport:
    """IC/IR audit over on-grid misreports for every bidder.

    DSIC gains are checked at positive-mass profiles, or at every profile with
    ``all_profiles``.  BIC gains are per unit of the bidder's type mass.
    """
    if mech.x.shape != (minst.n,) + minst.dims:
        raise ShapeMismatch("mechanism does not match the instance")
    mass = minst.pmf
    pos = mass > 0
    bic = dsic = expost = interim = 0.0
    for i in range(minst.n):
        t = minst.grids[i].points
        M = minst.bidder_view(i)
        X = minst.bidder_view(i, mech.x[i])
        P = minst.bidder_view(i, mech.p[i])
        live = minst.bidder_view(i, pos) if not all_profiles else np.ones_like(M, dtype=bool)
        own = t[:, None] * X - P
        for a in range(t.size):
            cols = np.flatnonzero(live[a])
            if cols.size == 0:
                continue
            dev = t[a] * X[:, cols] - P[:, cols]
            dsic = max(dsic, float(np.max(dev - own[a, cols][None, :])))
        fa = M.sum(axis=1)
        rows = np.flatnonzero(fa > 0)
        if rows.size:
            W = M[rows] / fa[rows, None]
            U = t[rows, None] * (W @ X.T) - W @ P.T
            truth = U[np.arange(rows.size), rows]
            bic = max(bic, float(np.max(U - truth[:, None])))
            interim = max(interim, float(np.max(-np.sum(W * own[rows], axis=1))))
        cell = own[minst.bidder_view(i, pos)]
        if cell.size:
            expost = max(expost, float(np.max(-cell)))
    paid = mech.p[:, pos]
    feas = float(np.max(mech.x.sum(axis=0) - 1.0)) if mech.x.size else 0.0
    return MultiAuditReport(
        mech.revenue(minst), max(bic, 0.0), max(dsic, 0.0), max(expost, 0.0), max(interim, 0.0),
        float(paid.min()) if paid.size else 0.0, max(feas, 0.0))


def second_price_revenue(minst: MultiBidderInstance) -> float:
    """Expected second-highest type (0 for a single bidder)."""
    return float(np.sum(minst.pmf * minst.secmax))


@dataclass(frozen=True)
class LookaheadResult:
    winner: np.ndarray
    prices: dict
    revenue: float
    revenue_by_bidder: tuple
    mechanism: MultiMechanism


def lookahead_auction(minst: MultiBidderInstance) -> LookaheadResult:
    """Dominant-strategy lookahead auction.

    The highest bidder (lowest index on ties) is offered the optimal posted
    price for the bidder's own type, conditioned on the opponents' types and on
    that bidder being the designated winner.  Opponent profiles with no such mass get no sale.
    """
    winner = minst.winner
    x = np.zeros((minst.n,) + minst.dims)
    p = np.zeros_like(x)
    prices = {}
    rev_by = []
    for i in range(minst.n):
        t = minst.grids[i].points
        M = minst.bidder_view(i)
        win = minst.bidder_view(i, winner == i)
        rest = tuple(d for k, d in enumerate(minst.dims) if k != i)
        Xi = np.zeros_like(M)
        Pi = np.zeros_like(M)
        rev_i = 0.0
        for r in range(M.shape[1]):
            masses = np.where(win[:, r], M[:, r], 0.0)
            price, rev = _best_price(t, masses)
            opp = tuple(int(k) for k in np.unravel_index(r, rest)) if rest else ()
            prices[(i, opp)] = price
            if math.isnan(price):
                continue
            sold = win[:, r] & (t >= price)
            Xi[sold, r] = 1.0
            Pi[sold, r] = price
            rev_i += rev
        shape_i = (minst.dims[i],) + rest
        x[i] = np.moveaxis(Xi.reshape(shape_i), 0, i)
        p[i] = np.moveaxis(Pi.reshape(shape_i), 0, i)
        rev_by.append(rev_i)
    mech = MultiMechanism(x, p)
    return LookaheadResult(winner, prices, float(sum(rev_by)), tuple(rev_by), mech)


def lift_two_bidders(inst: SignalPricingInstance, eps: float) -> MultiBidderInstance:
    """Turn the seller's signal into a second bidder worth s * eps / |S| (signals numbered 1..|S|)."""
    if not eps > 0:
        raise InvalidEps(f"eps must be positive, got {eps!r}")
    S = inst.n_signals
    pts = np.arange(1, S + 1) * (eps / S)
    g2 = ValueGrid(pts, np.full(S, eps / S))
    return MultiBidderInstance((inst.grid, g2), inst.mass, inst.mode,
                               meta={"family": "lift", "eps": float(eps), **dict(inst.meta)})


def single_bidder_instance(inst: SignalPricingInstance) -> MultiBidderInstance:
    """One-bidder profile instance from the value marginal."""
    return MultiBidderInstance((inst.grid,), inst.type_marginal, inst.mode)


def conditional_regularity(minst: MultiBidderInstance) -> list:
    """Regularity report for every bidder and every opponent profile with positive mass."""
    out = []
    for i in range(minst.n):
        M = minst.bidder_view(i)
        tot = M.sum(axis=0)
        for r in np.flatnonzero(tot > 0):
            out.append((i, int(r), regularity_audit(DiscreteDist(minst.grids[i], M[:, r] / tot[r]))))
    return out


def is_jointly_regular_multi(minst: MultiBidderInstance) -> bool:
    return all(rep.is_regular for _, _, rep in conditional_regularity(minst))


def profile_instance(grids: Sequence[ValueGrid], pmf, mode: Mode | str = Mode.MASS, **kw) -> MultiBidderInstance:
    if len(grids) < 1:
        raise InvalidParams("need at least one bidder")
    return MultiBidderInstance(tuple(grids), pmf, Mode(mode), **kw)
