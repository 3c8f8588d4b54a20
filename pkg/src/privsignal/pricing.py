"""Optimal posted prices and the public-signal revenue benchmark."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .core import DiscreteDist, SignalPricingInstance

# relative tolerance under which two revenues count as tied
TIE_RTOL = 1e-12


def _best_price(values: np.ndarray, masses: np.ndarray) -> tuple[float, float]:
    sup = np.flatnonzero(masses > 0)
    if sup.size == 0:
        return float("nan"), 0.0
    tail = np.cumsum(masses[::-1])[::-1]
    rev = values[sup] * tail[sup]
    best = rev.max()
    k = int(np.flatnonzero(rev >= best - TIE_RTOL * abs(best))[0])
    return float(values[sup[k]]), float(rev[k])


def optimal_posted_price(dist: DiscreteDist) -> tuple[float, float]:
    """Revenue-maximizing take-it-or-leave-it price on the support.

    Ties go to the lowest price.
    """
    return _best_price(dist.grid.points, dist.pmf)


def revenue_curve(dist: DiscreteDist) -> np.ndarray:
    """r * Pr[v >= r] at every grid point."""
    return dist.grid.points * dist.survival()


@dataclass(frozen=True)
class SignalPrice:
    signal: Hashable
    price: float
    contribution: float


@dataclass(frozen=True)
class DRevReport:
    per_signal: tuple
    total: float

    def contributions(self) -> np.ndarray:
        return np.array([row.contribution for row in self.per_signal])

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_signal": [
                {"signal": _jsonable(r.signal), "price": r.price, "contribution": r.contribution}
                for r in self.per_signal
            ],
        }


def _jsonable(s):
    return list(s) if isinstance(s, tuple) else s


def drev(inst: SignalPricingInstance) -> DRevReport:
    """Per-signal optimal posted prices; DRev(s) = f(s) * best conditional revenue.

    Working directly on the joint column avoids the division by f(s):
    f(s) * r * Pr[v >= r | s] = r * sum_{t >= r} mass(t, s).
    """
    t = inst.values
    rows = []
    block = 512
    for start in range(0, inst.n_signals, block):
        stop = min(start + block, inst.n_signals)
        cols = inst.pmf[:, start:stop]
        cols = cols.toarray() if inst.is_sparse else np.asarray(cols)
        for off in range(stop - start):
            price, contrib = _best_price(t, cols[:, off])
            rows.append(SignalPrice(inst.signals[start + off], price, contrib))
    total = float(sum(r.contribution for r in rows))
    return DRevReport(tuple(rows), total)


def best_global_price_revenue(inst: SignalPricingInstance) -> float:
    """Revenue of the single best price ignoring the signal."""
    return _best_price(inst.values, inst.type_marginal)[1]
