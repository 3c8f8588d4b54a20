import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from privsignal.core import ValueGrid, build_instance, example1_instance, example2_instance
from privsignal.errors import InvalidDomain, InvalidH, ShapeMismatch, WrongInstanceShape
from privsignal.mechanisms import (Mechanism, audit_mechanism, example1_mechanism, example1_revenue_bound,
                                   example2_enumeration_audit, example2_mechanism, example2_symmetry_audit,
                                   g_example, utility_matrix)
from privsignal.modes import ConstraintMode

from helpers import loop_audit

UNIFORM12 = build_instance(ValueGrid.from_points([1, 2]), ["*"], [[.5], [.5]])


class TestAudit:
    def test_zero_mechanism(self):
        rep = audit_mechanism(UNIFORM12, Mechanism(np.zeros((2, 1)), np.zeros((2, 1))))
        assert rep.revenue == 0 and rep.max_bic_violation == 0 and rep.max_expost_ir_violation == 0

    def test_full_price_mechanism(self):
        rep = audit_mechanism(UNIFORM12, Mechanism(np.ones((2, 1)), np.array([[1.0], [2.0]])))
        assert rep.max_expost_ir_violation == 0
        assert rep.max_bic_violation == pytest.approx(1.0)
        assert rep.worst_deviation == (2.0, 1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            audit_mechanism(UNIFORM12, Mechanism(np.zeros((3, 1)), np.zeros((3, 1))))

    def test_allocation_range(self):
        with pytest.raises(ShapeMismatch):
            Mechanism(np.full((2, 1), 1.5), np.zeros((2, 1)))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 4))
    def test_matches_loop_oracle(self, seed, n, S):
        rng = np.random.default_rng(seed)
        mass = rng.dirichlet(np.ones(n * S)).reshape(n, S) * (rng.random((n, S)) > 0.2)
        if mass.sum() == 0:
            mass[0, 0] = 1
        mass /= mass.sum()
        vals = np.sort(rng.choice(np.arange(1, 30), n, replace=False)).astype(float)
        inst = build_instance(ValueGrid.from_points(vals), list(range(S)), mass)
        x = rng.random((n, S)) * (mass > 0)
        p = rng.normal(0, 5, (n, S)) * (mass > 0)
        rep = audit_mechanism(inst, Mechanism(x, p))
        bic, ir = loop_audit(vals, inst.mass, x, p)
        assert rep.max_bic_violation == pytest.approx(max(bic, 0), abs=1e-9)
        assert rep.max_expost_ir_violation == pytest.approx(max(ir, 0), abs=1e-12)
        assert rep.revenue == pytest.approx(float(np.sum(inst.mass * p)), abs=1e-12)

    def test_dsic_only_when_requested(self):
        mech = Mechanism(np.ones((2, 1)), np.array([[1.0], [1.0]]))
        assert audit_mechanism(UNIFORM12, mech).max_dsic_violation is None
        rep = audit_mechanism(UNIFORM12, mech, mode=ConstraintMode.parse(ic="dsic"))
        assert rep.max_dsic_violation == 0 and rep.passes(ConstraintMode.parse(ic="dsic"))

    def test_relative_tolerance(self):
        mech = Mechanism(np.ones((2, 1)), np.array([[1.0], [1.0 + 1e-8]]))
        rep = audit_mechanism(UNIFORM12, mech)
        assert not rep.passes(tol=1e-9) and rep.passes(tol=1e-8, relative=True)


class TestGExample:
    def test_z_one(self):
        assert g_example(1.0, 100.0) == 0.0

    def test_reference_point(self):
        H = math.exp(10)
        z = math.e ** 2
        ys = np.linspace(1, 20, 2_000_001)
        ref = float(np.max(np.log(ys) * (z - ys) / 10))
        assert g_example(z, H) == pytest.approx(ref, abs=1e-9)
        assert g_example(z, H) == pytest.approx(0.488, abs=5e-4)

    def test_domain(self):
        with pytest.raises(InvalidDomain):
            g_example(0.5, 100)
        with pytest.raises(InvalidDomain):
            g_example(2.0, 2.0)

    @given(st.floats(1.0, 1e9), st.floats(3.0, 1e12))
    def test_upper_bounds(self, z, H):
        val = g_example(z, H)
        lnH = math.log(H)
        assert val <= z * math.log(z) / lnH + 1e-9 * max(1, z)
        if z >= math.e:
            assert val <= (math.log(z) - math.log(math.log(z)) + 1) * z / lnH + 1e-9 * z

    @given(st.floats(1.0, 1e6))
    def test_dense_search_oracle(self, z):
        H = 1e6
        ys = np.geomspace(1, H, 200_001)
        ref = float(np.max(np.log(ys) * (z - ys) / math.log(H)))
        assert g_example(z, H) >= ref - 1e-12
        assert g_example(z, H) <= ref + 1e-6 * max(1.0, z)


class TestExample1Mechanism:
    def test_boundary_types(self):
        inst = example1_instance(1e6, 0.3, 40)
        m = example1_mechanism(inst)
        assert m.x[0, 0] == 0 and m.p[0, 0] == 0
        assert m.x[-1, 0] == pytest.approx(1) and m.p[-1, 0] == pytest.approx(1e6)

    def test_half_eps_rebate(self):
        inst = example1_instance(1e4, 0.5, 30)
        m = example1_mechanism(inst)
        t = inst.values
        for i, v in enumerate(t):
            assert m.p[i, i + 1] == pytest.approx(-g_example(v, 1e4, t), rel=1e-12)
            assert m.x[i, i + 1] == 0

    def test_wrong_family(self):
        with pytest.raises(WrongInstanceShape):
            example1_mechanism(UNIFORM12)

    @pytest.mark.parametrize("H,eps,n", [(1e3, 1e-4, 100), (1e6, 1e-2, 200), (1e9, 1e-4, 400), (1e12, 0.3, 150)])
    def test_ic_and_ir(self, H, eps, n):
        inst = example1_instance(H, eps, n)
        rep = audit_mechanism(inst, example1_mechanism(inst))
        assert rep.max_bic_violation <= 1e-8
        assert rep.max_expost_ir_violation == 0.0
        assert rep.off_support_entries == 0

    def test_revenue_bound_under_refinement(self):
        H, eps = 1e9, 1e-4
        bound = example1_revenue_bound(H, eps)
        revs = [audit_mechanism(i, example1_mechanism(i)).revenue
                for i in (example1_instance(H, eps, n) for n in (100, 200, 400))]
        assert all(r >= bound - 0.05 for r in revs)

    def test_bound_formula(self):
        assert example1_revenue_bound(math.exp(math.e ** 2), 0.0) == pytest.approx(0.0, abs=1e-12)
        assert example1_revenue_bound(1e9, 1e-4) == pytest.approx(0.9999 * (math.log(math.log(1e9)) - 2))
        hs = np.geomspace(20, 1e15, 40)
        assert np.all(np.diff([example1_revenue_bound(h, 0.1) for h in hs]) >= 0)
        with pytest.raises(InvalidH):
            example1_revenue_bound(10.0, 0.1)


class TestExample2:
    @pytest.mark.parametrize("m", [2, 4, 8, 12, 16])
    def test_symmetry_audit(self, m):
        a = example2_symmetry_audit(m)
        assert a.truthful_exact
        assert a.max_deviation_ratio <= Fraction(1, 2)
        assert a.revenue == a.expected_value / 3
        assert a.drev == Fraction(24, 7)
        assert sum(r.prob for r in a.types) == 1

    def test_ratio_increasing(self):
        ratios = [example2_symmetry_audit(m).ratio for m in (4, 8, 12, 16)]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_enumeration_agrees(self, m):
        sym = example2_symmetry_audit(m)
        enum = example2_enumeration_audit(m)
        for r in sym.types:
            truth, dev = enum[float(r.value)]
            assert truth == pytest.approx(float(r.truthful_utility), abs=1e-12 * float(r.value))
            assert dev == pytest.approx(float(r.best_deviation_utility), abs=1e-12 * float(r.value))

    def test_mechanism_matches_instance_and_drev(self):
        from privsignal.pricing import drev
        inst = example2_instance(5)
        mech = example2_mechanism(inst)
        rep = audit_mechanism(inst, mech)
        sym = example2_symmetry_audit(5)
        assert rep.revenue == pytest.approx(float(sym.revenue), rel=1e-12)
        assert rep.max_bic_violation == 0 and rep.max_expost_ir_violation == 0
        assert drev(inst).total == pytest.approx(24 / 7, rel=1e-12)
        u = utility_matrix(inst, mech)
        np.testing.assert_allclose(np.diag(u), 2 * inst.values / 3, rtol=1e-12)
