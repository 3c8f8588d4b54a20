"""Independent reference computations used as oracles by the tests."""

from fractions import Fraction

import numpy as np


def brute_force_price(values, masses):
    """Exact (Fraction) best posted price over support points, lowest on ties."""
    vals = [Fraction(v) for v in values]
    ms = [Fraction(m) for m in masses]
    best_p, best_r = None, Fraction(-1)
    for i, r in enumerate(vals):
        if ms[i] == 0:
            continue
        rev = r * sum(ms[j] for j in range(len(vals)) if vals[j] >= r)
        if rev > best_r:
            best_p, best_r = r, rev
    return best_p, best_r


def fraction_virtual_values(values, masses):
    """Forward-gap virtual values in exact arithmetic on the support."""
    vals = [Fraction(v) for v in values]
    ms = [Fraction(m) for m in masses]
    sup = [i for i, m in enumerate(ms) if m > 0]
    out = {}
    for k, i in enumerate(sup):
        if k == len(sup) - 1:
            out[i] = vals[i]
            continue
        above = sum(ms[j] for j in sup[k + 1:])
        out[i] = vals[i] - above * (vals[sup[k + 1]] - vals[i]) / ms[i]
    return out


def loop_audit(values, mass, x, p):
    """Per-unit BIC gain and ex-post IR violation by explicit loops."""
    n, S = mass.shape
    bic = 0.0
    for a in range(n):
        fa = mass[a].sum()
        if fa <= 0:
            continue
        own = sum(mass[a, s] * (values[a] * x[a, s] - p[a, s]) for s in range(S))
        for b in range(n):
            dev = sum(mass[a, s] * (values[a] * x[b, s] - p[b, s]) for s in range(S))
            bic = max(bic, (dev - own) / fa)
    ir = 0.0
    for a in range(n):
        for s in range(S):
            if mass[a, s] > 0:
                ir = max(ir, p[a, s] - values[a] * x[a, s])
    return bic, ir


def lattice_mechanisms(n, S, levels=(0.0, 0.5, 1.0)):
    """Every allocation on the lattice, as an (n, S) array."""
    import itertools
    for combo in itertools.product(levels, repeat=n * S):
        yield np.array(combo).reshape(n, S)
