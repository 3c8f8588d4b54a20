"""Discrete instances, canonical distribution builders and virtual values.

A single-buyer instance is a joint probability mass over a value grid and a
finite signal set.  Two storage modes exist: ``mass`` treats every grid point
as an atom (used by the LPs and auditors) and ``quadrature`` treats each
point as the left end of a cell ``[t, t + width)`` carrying a piecewise
constant density (used by the dual-field integrals).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Hashable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatch,
    IncompatibleShapes,
    InvalidH,
    InvalidParams,
    NegativeMass,
    SumNotOne,
    TooManyLevels,
    ZeroMassSignal,
)

SUM_TOL = 1e-9
MAX_EXAMPLE2_LEVELS = 16


class Mode(str, enum.Enum):
    MASS = "mass"
    QUADRATURE = "quadrature"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ValueGrid:
    """Strictly increasing nonnegative value points with per-point cell widths."""

    points: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points).reshape(-1)
        w = _frozen(self.widths).reshape(-1)
        if pts.size == 0:
            raise DimensionMismatch("grid needs at least one point")
        if w.shape != pts.shape:
            raise DimensionMismatch(f"{w.size} widths for {pts.size} points")
        if np.any(pts < 0) or np.any(np.diff(pts) <= 0):
            raise InvalidParams("grid points must be nonnegative and strictly increasing")
        if np.any(w <= 0):
            raise InvalidParams("cell widths must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "widths", w)

    def __len__(self) -> int:
        return self.points.size

    @classmethod
    def from_points(cls, points: Sequence[float], widths: Sequence[float] | None = None) -> "ValueGrid":
        """Build a grid; default widths are the forward gaps (last cell repeats the final gap)."""
        pts = np.asarray(points, dtype=float).reshape(-1)
        if widths is None:
            widths = forward_gap_widths(pts)
        return cls(pts, np.asarray(widths, dtype=float))

    @property
    def tiles(self) -> bool:
        """True when consecutive cells abut, i.e. widths equal forward gaps."""
        return bool(np.allclose(self.widths[:-1], np.diff(self.points), rtol=1e-12, atol=0.0))


def forward_gap_widths(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 1:
        return np.ones(1)
    gaps = np.diff(pts)
    return np.append(gaps, gaps[-1])


def linear_grid(lo: float, hi: float, n: int) -> ValueGrid:
    return ValueGrid.from_points(np.linspace(lo, hi, n))


def geometric_grid(lo: float, hi: float, n: int) -> ValueGrid:
    if n == 1:
        return ValueGrid.from_points([lo])
    pts = lo * (hi / lo) ** (np.arange(n) / (n - 1))
    pts[0], pts[-1] = lo, hi
    return ValueGrid.from_points(pts)


@dataclass(frozen=True)
class DiscreteDist:
    grid: ValueGrid
    pmf: np.ndarray

    def __post_init__(self):
        pmf = _frozen(self.pmf).reshape(-1)
        if pmf.size != len(self.grid):
            raise DimensionMismatch(f"{pmf.size} masses for {len(self.grid)} grid points")
        if np.any(pmf < 0):
            raise NegativeMass("negative probability mass")
        if abs(pmf.sum() - 1.0) > SUM_TOL:
            raise SumNotOne(f"masses sum to {pmf.sum()!r}")
        object.__setattr__(self, "pmf", pmf)

    @property
    def values(self) -> np.ndarray:
        return self.grid.points

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.pmf > 0)

    def survival(self) -> np.ndarray:
        """Pr[v >= t_i] for every grid point."""
        return np.cumsum(self.pmf[::-1])[::-1]

    def mean(self) -> float:
        return float(self.pmf @ self.grid.points)


@dataclass(frozen=True)
class SignalPricingInstance:
    """Joint mass over (value grid) x (signals).

    ``pmf`` is a dense ``(n_values, n_signals)`` array or, for very wide
    signal sets, a ``scipy.sparse`` CSC array of the same shape.
    ``components`` records the number of mixed regular families (1 for a
    plain instance) and ``meta`` carries builder parameters.
    """

    grid: ValueGrid
    signals: tuple
    pmf: Any
    mode: Mode = Mode.MASS
    components: int = 1
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))
        shape = (len(self.grid), len(self.signals))
        if sp.issparse(self.pmf):
            pmf = sp.csc_array(self.pmf, dtype=float)
            pmf.eliminate_zeros()
            data = pmf.data
        else:
            pmf = np.array(self.pmf, dtype=float)
            if pmf.ndim == 1 and shape[1] == 1:
                pmf = pmf.reshape(-1, 1)
            data = pmf
        if pmf.shape != shape:
            raise DimensionMismatch(f"pmf shape {pmf.shape} != grid x signals {shape}")
        if np.any(data < 0):
            raise NegativeMass("negative probability mass")
        total = float(data.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise SumNotOne(f"masses sum to {total!r}")
        if abs(total - 1.0) > 1e-12:
            pmf = pmf / total
        if isinstance(pmf, np.ndarray):
            pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)
        if len(set(self.signals)) != len(self.signals):
            raise DimensionMismatch("duplicate signal labels")

    @property
    def values(self) -> np.ndarray:
        return self.grid.points

    @property
    def n_values(self) -> int:
        return len(self.grid)

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.pmf)

    @cached_property
    def mass(self) -> np.ndarray:
        """Dense copy of the joint mass matrix."""
        m = self.pmf.toarray() if self.is_sparse else np.asarray(self.pmf)
        m = np.array(m, dtype=float)
        m.setflags(write=False)
        return m

    @cached_property
    def type_marginal(self) -> np.ndarray:
        return np.asarray(self.pmf.sum(axis=1)).reshape(-1)

    @cached_property
    def signal_marginal(self) -> np.ndarray:
        return np.asarray(self.pmf.sum(axis=0)).reshape(-1)

    @cached_property
    def _signal_index(self) -> dict:
        return {s: j for j, s in enumerate(self.signals)}

    def signal_index(self, s: Hashable) -> int:
        try:
            return self._signal_index[s]
        except KeyError:
            raise InvalidParams(f"unknown signal {s!r}") from None

    def column(self, j: int) -> np.ndarray:
        if self.is_sparse:
            return self.pmf[:, [j]].toarray().reshape(-1)
        return np.asarray(self.pmf[:, j])

    def density(self) -> np.ndarray:
        """f(t, s) = mass / cell width."""
        return self.mass / self.grid.widths[:, None]

    def value_marginal(self) -> DiscreteDist:
        return DiscreteDist(self.grid, self.type_marginal)


@dataclass(frozen=True)
class RegularityReport:
    virtuals: np.ndarray
    is_monotone: bool
    first_violation_index: int | None
    support_contiguous: bool

    @property
    def is_regular(self) -> bool:
        return self.is_monotone and self.support_contiguous


def build_instance(grid: ValueGrid, signals: Sequence, pmf, mode: Mode | str = Mode.MASS,
                   components: int = 1, meta: Mapping | None = None) -> SignalPricingInstance:
    return SignalPricingInstance(grid, tuple(signals), pmf, Mode(mode), components, meta or {})


def erd_grid(H: float, n_points: int, spacing: str = "geometric") -> DiscreteDist:
    """Equal revenue distribution truncated at ``H``, rounded down onto a grid.

    Grid point t_i receives F(t_{i+1}) - F(t_i) with F(v) = 1 - 1/v; the top
    point H keeps the atom 1/H.
    """
    if not H > 1:
        raise InvalidH(f"H must exceed 1, got {H!r}")
    if n_points < 2:
        raise InvalidParams("n_points must be at least 2")
    grid = geometric_grid(1.0, H, n_points) if spacing == "geometric" else linear_grid(1.0, H, n_points)
    t = grid.points
    inv = 1.0 / t
    pmf = np.append(inv[:-1] - inv[1:], inv[-1])
    return DiscreteDist(grid, pmf)


def example1_instance(H: float, eps: float, n_points: int, mode: Mode | str = Mode.MASS,
                      spacing: str = "geometric") -> SignalPricingInstance:
    """Equal-revenue values; the signal reveals the value w.p. ``eps`` and is ``'*'`` otherwise."""
    if not H > math.e:
        raise InvalidParams(f"H must exceed e, got {H!r}")
    if not 0.0 < eps < 1.0:
        raise InvalidParams(f"eps must lie in (0, 1), got {eps!r}")
    er = erd_grid(H, n_points, spacing)
    n = len(er.grid)
    pmf = np.zeros((n, n + 1))
    pmf[:, 0] = (1.0 - eps) * er.pmf
    pmf[np.arange(n), np.arange(n) + 1] = eps * er.pmf
    signals = ("*",) + tuple(float(v) for v in er.grid.points)
    return build_instance(er.grid, signals, pmf, mode,
                          meta={"family": "example1", "H": float(H), "eps": float(eps)})


def example2_levels(m_levels: int) -> np.ndarray:
    """Sorted value set {3k + b : k = 1..m, b in {0, 1}}."""
    return np.array([3 * k + b for k in range(1, m_levels + 1) for b in (0, 1)], dtype=float)


def example2_instance(m_levels: int, mode: Mode | str = Mode.MASS) -> SignalPricingInstance:
    """Interleaved-support instance with signals in {0,1}^m (sparse storage).

    Given s, the support is {3k + s_k} and the conditional is the discrete
    equal-revenue law on it, normalized to sum to one.  The joint mass is the
    uniform prior on s times the unnormalized conditional (which sums to
    1/t_1(s)), renormalized globally; hence Pr[s] is proportional to 1/t_1(s).
    """
    if not 2 <= m_levels <= MAX_EXAMPLE2_LEVELS:
        raise TooManyLevels(f"m_levels must be in [2, {MAX_EXAMPLE2_LEVELS}], got {m_levels}")
    m = m_levels
    n_sig = 1 << m
    codes = np.arange(n_sig)
    bits = (codes[:, None] >> (m - 1 - np.arange(m))[None, :]) & 1
    support = 3.0 * (np.arange(m)[None, :] + 1) + bits
    unnorm = np.empty_like(support)
    unnorm[:, :-1] = 1.0 / support[:, :-1] - 1.0 / support[:, 1:]
    unnorm[:, -1] = 1.0 / support[:, -1]
    z = np.mean(1.0 / support[:, 0])
    data = unnorm / (z * n_sig)
    rows = 2 * np.arange(m)[None, :] + bits
    cols = np.broadcast_to(codes[:, None], rows.shape)
    pmf = sp.csc_array((data.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * m, n_sig))
    grid = ValueGrid.from_points(example2_levels(m))
    signals = tuple(itertools.product((0, 1), repeat=m))
    return build_instance(grid, signals, pmf, mode, meta={"family": "example2", "m_levels": m})


def marginal_signal(inst: SignalPricingInstance) -> np.ndarray:
    return inst.signal_marginal


def conditional(inst: SignalPricingInstance, s: Hashable) -> DiscreteDist:
    """Value distribution given signal label ``s``."""
    return conditional_at(inst, inst.signal_index(s))


def conditional_at(inst: SignalPricingInstance, j: int) -> DiscreteDist:
    fs = inst.signal_marginal[j]
    if fs <= 0:
        raise ZeroMassSignal(f"signal {inst.signals[j]!r} has zero mass")
    return DiscreteDist(inst.grid, inst.column(j) / fs)


def virtual_values(dist: DiscreteDist) -> np.ndarray:
    """Discrete virtual values aligned to the grid (NaN off the support).

    phi(t_i) = t_i - (1 - F(t_i)) * (t_next - t_i) / pmf(t_i), where t_next is
    the next support point; the top support point keeps phi = t.  With this
    forward-gap convention sum_{i >= j} pmf_i phi_i = t_j Pr[v >= t_j] exactly.
    """
    t = dist.grid.points
    phi = np.full(t.size, np.nan)
    sup = dist.support
    if sup.size == 0:
        return phi
    ts, ps = t[sup], dist.pmf[sup]
    above = np.append(np.cumsum(ps[::-1])[::-1][1:], 0.0)
    gaps = np.append(np.diff(ts), 0.0)
    phi[sup] = ts - above * gaps / ps
    return phi


def _mono_tol(values: np.ndarray) -> float:
    # phi carries rounding proportional to the value scale
    return 1e-12 * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)


def regularity_audit(dist: DiscreteDist) -> RegularityReport:
    phi = virtual_values(dist)
    sup = dist.support
    contiguous = bool(sup.size == 0 or sup[-1] - sup[0] + 1 == sup.size)
    ps = phi[sup]
    drops = np.flatnonzero(np.diff(ps) < -_mono_tol(dist.grid.points[sup]))
    first = int(sup[drops[0] + 1]) if drops.size else None
    phi.setflags(write=False)
    return RegularityReport(phi, drops.size == 0, first, contiguous)


def joint_regularity_audit(inst: SignalPricingInstance) -> dict:
    """Per-signal regularity reports (signals with zero mass are skipped)."""
    out = {}
    fs = inst.signal_marginal
    for j, s in enumerate(inst.signals):
        if fs[j] > 0:
            out[s] = regularity_audit(conditional_at(inst, j))
    return out


def is_jointly_regular(inst: SignalPricingInstance) -> bool:
    return all(r.is_regular for r in joint_regularity_audit(inst).values())


def mixture_instance(instances: Sequence[SignalPricingInstance], weights: Sequence[float]) -> SignalPricingInstance:
    """Pointwise mixture of instances sharing grid and signal set."""
    if len(instances) == 0 or len(instances) != len(weights):
        raise IncompatibleShapes("need one weight per instance")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL:
        raise IncompatibleShapes("weights must be nonnegative and sum to 1")
    base = instances[0]
    for other in instances[1:]:
        if (not np.array_equal(other.grid.points, base.grid.points)
                or not np.array_equal(other.grid.widths, base.grid.widths)
                or other.signals != base.signals or other.mode != base.mode):
            raise IncompatibleShapes("mixture components must share grid, signals and mode")
    pmf = sum(wi * inst.mass for wi, inst in zip(w, instances))
    k = sum(inst.components for wi, inst in zip(w, instances) if wi > 0)
    return build_instance(base.grid, base.signals, pmf, base.mode, components=k,
                          meta={"family": "mixture", "weights": tuple(w.tolist())})
