"""Seeded instance families for experiments and tests.

Every regular family is a discretisation of a continuous law with monotone
hazard rate, so the discrete virtual value is monotone at any resolution and
the same seed describes the same continuous instance at every grid size.
"""

from __future__ import annotations

import numpy as np

from .auctions import MultiBidderInstance
from .core import (Mode, SignalPricingInstance, ValueGrid, build_instance, is_jointly_regular,
                   linear_grid, mixture_instance)
from .errors import InvalidParams

LO, HI = 1.0, 10.0
FAMILIES = ("exponential", "uniform", "linear_hazard")


def _conditional_pmf(t: np.ndarray, family: str, lo: float, hi: float, rate: float, slope: float) -> np.ndarray:
    inside = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    idx = np.flatnonzero(inside)
    if idx.size < 2:
        # snap to the two nearest points so the support stays contiguous
        c = int(np.argmin(np.abs(t - 0.5 * (lo + hi))))
        c = min(max(c, 0), t.size - 2)
        idx = np.array([c, c + 1])
    ts = t[idx]
    if family == "uniform":
        w = np.ones(ts.size)
    elif family == "exponential":
        w = np.exp(-rate * (ts - ts[0]))
    elif family == "linear_hazard":
        # hazard rate + slope * (t - lo) integrated over each step
        edges = np.append(ts, ts[-1] + (ts[-1] - ts[-2]))
        H = rate * (edges - ts[0]) + 0.5 * slope * (edges - ts[0]) ** 2
        surv = np.exp(-H)
        w = surv[:-1] - surv[1:]
        w[-1] = surv[-2]
    else:
        raise InvalidParams(f"unknown family {family!r}")
    pmf = np.zeros(t.size)
    pmf[idx] = w / w.sum()
    return pmf


def random_regular_instance(seed: int, n_values: int = 200, n_signals: int | None = None,
                            mode: Mode | str = Mode.QUADRATURE) -> SignalPricingInstance:
    """Jointly regular instance on a linear grid over [1, 10].

    Continuous parameters are drawn before the grid is built, so refining
    ``n_values`` discretises the same underlying instance.  ``n_signals``
    defaults to a seeded draw from 2..8.
    """
    if n_values < 2:
        raise InvalidParams("need at least two grid points")
    rng = np.random.default_rng(seed)
    S = int(rng.integers(2, 9)) if n_signals is None else int(n_signals)
    if S < 1:
        raise InvalidParams("need at least one signal")
    weights = rng.dirichlet(np.ones(S))
    params = []
    for _ in range(S):
        a, b = np.sort(rng.uniform(LO, HI, 2))
        if b - a < 1.0:
            a, b = max(LO, a - 0.5), min(HI, b + 0.5)
        params.append((FAMILIES[int(rng.integers(len(FAMILIES)))], a, b,
                       float(rng.uniform(-0.8, 0.8)), float(rng.uniform(0.0, 0.5))))
    grid = linear_grid(LO, HI, n_values)
    t = grid.points
    cols = []
    for (fam, a, b, rate, slope), wgt in zip(params, weights):
        if fam == "linear_hazard":
            rate = abs(rate) + 0.05
        cols.append(wgt * _conditional_pmf(t, fam, a, b, rate, slope))
    inst = build_instance(grid, list(range(S)), np.column_stack(cols), mode,
                          meta={"family": "random_regular", "seed": int(seed)})
    if not is_jointly_regular(inst):
        raise AssertionError(f"seed {seed}: generated instance is not jointly regular")
    return inst


def random_mixture_instance(seed: int, k: int = 2, n_values: int = 200, n_signals: int | None = None,
                            mode: Mode | str = Mode.QUADRATURE) -> SignalPricingInstance:
    """Mixture of ``k`` independent regular components sharing grid and signal labels."""
    rng = np.random.default_rng([seed, 7919])
    S = int(rng.integers(2, 9)) if n_signals is None else int(n_signals)
    comps = [random_regular_instance(int(rng.integers(2**31)), n_values, S, mode) for _ in range(k)]
    inst = mixture_instance(comps, rng.dirichlet(np.ones(k)))
    return inst


def random_regular_profile_instance(seed: int, n_points: int = 12, n_bidders: int = 2,
                                    mode: Mode | str = Mode.QUADRATURE) -> MultiBidderInstance:
    """Joint law proportional to exp(-sum a_i t_i - c prod t_i) on a linear grid.

    Every conditional of t_i given the others is a truncated geometric law, so
    the instance is jointly regular.
    """
    rng = np.random.default_rng(seed)
    grid = linear_grid(LO, HI, n_points)
    a = rng.uniform(-0.4, 0.6, n_bidders)
    c = float(rng.uniform(-0.02, 0.04))
    mesh = np.meshgrid(*([grid.points] * n_bidders), indexing="ij")
    expo = -sum(ai * ti for ai, ti in zip(a, mesh)) - c * np.prod(mesh, axis=0)
    w = np.exp(expo - expo.max())
    return MultiBidderInstance(tuple([grid] * n_bidders), w / w.sum(), Mode(mode),
                               meta={"family": "random_regular_profile", "seed": int(seed)})


def random_profile_instance(seed: int, dims=(6, 5), zero_fraction: float = 0.2,
                            mode: Mode | str = Mode.QUADRATURE) -> MultiBidderInstance:
    """Arbitrary correlated profile law on random grids, with some empty profiles."""
    rng = np.random.default_rng(seed)
    grids = []
    for d in dims:
        pts = np.sort(rng.uniform(0.5, 20.0, d))
        pts = np.unique(np.round(pts, 6))
        while pts.size < d:
            pts = np.unique(np.append(pts, rng.uniform(0.5, 20.0)))
        grids.append(ValueGrid.from_points(pts))
    w = rng.exponential(1.0, tuple(dims)) * (rng.random(tuple(dims)) >= zero_fraction)
    if w.sum() == 0:
        w.flat[0] = 1.0
    return MultiBidderInstance(tuple(grids), w / w.sum(), Mode(mode),
                               meta={"family": "random_profile", "seed": int(seed)})


def generic_instance(seed: int, n_values: int = 3, n_signals: int = 3,
                     mode: Mode | str = Mode.MASS) -> SignalPricingInstance:
    """Strictly positive correlated instance whose belief rows are linearly independent."""
    rng = np.random.default_rng(seed)
    t = np.arange(1.0, n_values + 1.0)
    for _ in range(100):
        pmf = rng.dirichlet(np.ones(n_values * n_signals)).reshape(n_values, n_signals)
        beliefs = pmf / pmf.sum(axis=1, keepdims=True)
        if np.linalg.matrix_rank(beliefs, tol=1e-6) == min(n_values, n_signals):
            return build_instance(ValueGrid.from_points(t), list(range(n_signals)), pmf, mode,
                                  meta={"family": "generic", "seed": int(seed)})
    raise InvalidParams("could not draw a generic instance")


def belief_rank(inst: SignalPricingInstance, tol: float = 1e-6) -> int:
    m = inst.mass
    ft = m.sum(axis=1)
    rows = m[ft > 0] / ft[ft > 0, None]
    return int(np.linalg.matrix_rank(rows, tol=tol))
