from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from privsignal.core import (DiscreteDist, Mode, ValueGrid, build_instance, conditional, conditional_at,
                             erd_grid, example1_instance, example2_instance, geometric_grid,
                             joint_regularity_audit, linear_grid, marginal_signal, mixture_instance,
                             regularity_audit, virtual_values)
from privsignal.errors import (DimensionMismatch, IncompatibleShapes, InvalidH, InvalidParams, NegativeMass,
                               SumNotOne, TooManyLevels, ZeroMassSignal)

from helpers import fraction_virtual_values


def grid(*pts):
    return ValueGrid.from_points(list(pts))


class TestValueGrid:
    def test_forward_gap_widths_tile(self):
        g = grid(1, 2, 4)
        np.testing.assert_array_equal(g.widths, [1, 2, 2])
        assert g.tiles

    def test_rejects_unsorted_and_negative(self):
        with pytest.raises(InvalidParams):
            grid(2, 1)
        with pytest.raises(InvalidParams):
            grid(-1, 1)
        with pytest.raises(InvalidParams):
            ValueGrid(np.array([1.0, 2.0]), np.array([1.0, 0.0]))

    def test_geometric_endpoints_exact(self):
        g = geometric_grid(1.0, 1e9, 400)
        assert g.points[0] == 1.0 and g.points[-1] == 1e9
        assert linear_grid(1.0, 10.0, 7).points[-1] == 10.0


class TestBuildInstance:
    def test_point_mass(self):
        inst = build_instance(grid(1), ["a"], [[1.0]])
        assert inst.mass.sum() == 1.0

    def test_sum_not_one(self):
        with pytest.raises(SumNotOne):
            build_instance(grid(1, 2), ["a"], [[0.6], [0.5]])

    def test_negative_mass(self):
        with pytest.raises(NegativeMass):
            build_instance(grid(1, 2), ["a"], [[1.2], [-0.2]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_instance(grid(1, 2), ["a", "b"], [[1.0], [0.0]])

    def test_symmetric_conditional(self):
        inst = build_instance(grid(1, 2), ["a", "b"], [[.25, .25], [.25, .25]])
        np.testing.assert_allclose(conditional(inst, "a").pmf, [0.5, 0.5])

    def test_immutable(self):
        inst = build_instance(grid(1, 2), ["a"], [[0.5], [0.5]])
        with pytest.raises((ValueError, AttributeError)):
            inst.mass[0, 0] = 1.0

    def test_zero_mass_signal(self):
        inst = build_instance(grid(1, 2), ["a", "b"], [[0.5, 0], [0.5, 0]])
        with pytest.raises(ZeroMassSignal):
            conditional_at(inst, 1)

    @given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_conditional_roundtrip(self, n, S, seed):
        rng = np.random.default_rng(seed)
        pmf = rng.dirichlet(np.ones(n * S)).reshape(n, S)
        inst = build_instance(ValueGrid.from_points(np.arange(1, n + 1)), list(range(S)), pmf)
        fs = marginal_signal(inst)
        rebuilt = np.column_stack([conditional_at(inst, j).pmf * fs[j] for j in range(S)])
        np.testing.assert_allclose(rebuilt, inst.mass, rtol=1e-14, atol=1e-300)
        assert abs(inst.mass.sum() - 1) <= 1e-12


class TestEqualRevenue:
    def test_two_points(self):
        np.testing.assert_allclose(erd_grid(2, 2).pmf, [0.5, 0.5])

    def test_three_points(self):
        np.testing.assert_allclose(erd_grid(4, 3).pmf, [0.5, 0.25, 0.25])

    def test_invalid_h(self):
        with pytest.raises(InvalidH):
            erd_grid(1.0, 5)

    @given(st.floats(1.5, 1e12), st.integers(2, 500))
    def test_flat_revenue_and_top_atom(self, H, n):
        d = erd_grid(H, n)
        t = d.grid.points
        assert abs(d.pmf.sum() - 1) <= 1e-12
        assert d.pmf[-1] >= 1 / H * (1 - 1e-12)
        surv = np.cumsum(d.pmf[::-1])[::-1]
        np.testing.assert_allclose(t[:-1] * surv[:-1], 1.0, atol=1e-9)


class TestExample1Instance:
    def test_masses(self):
        inst = example1_instance(4, 0.5, 3)
        j2 = inst.signal_index(2.0)
        i2 = 1
        assert inst.mass[i2, j2] == pytest.approx(0.125)
        assert inst.mass[i2, inst.signal_index("*")] == pytest.approx(0.125)

    @pytest.mark.parametrize("eps", [0.0, 1.0])
    def test_eps_boundaries(self, eps):
        with pytest.raises(InvalidParams):
            example1_instance(4, eps, 3)

    def test_h_must_exceed_e(self):
        with pytest.raises(InvalidParams):
            example1_instance(2.5, 0.5, 3)

    def test_conditionals(self):
        inst = example1_instance(4, 0.5, 3)
        np.testing.assert_allclose(conditional(inst, "*").pmf, [0.5, 0.25, 0.25])
        np.testing.assert_allclose(conditional(inst, 2.0).pmf, [0, 1, 0])


class TestExample2Instance:
    def test_supports(self):
        inst = example2_instance(2)
        t = inst.values
        assert set(t[conditional(inst, (0, 0)).pmf > 0]) == {3.0, 6.0}
        assert set(t[conditional(inst, (1, 0)).pmf > 0]) == {4.0, 6.0}

    def test_conditional_normalised(self):
        inst = example2_instance(2)
        c = conditional(inst, (0, 0)).pmf
        np.testing.assert_allclose(c[c > 0], [0.5, 0.5])

    def test_signal_weights_follow_lowest_support_point(self):
        inst = example2_instance(3)
        fs = marginal_signal(inst)
        t = inst.values
        for j, s in enumerate(inst.signals):
            lo = 3 + s[0]
            # global normalisation: Pr[s] is proportional to 1 / t_1(s)
            assert fs[j] * lo == pytest.approx(fs[0] * 3)
        assert inst.is_sparse

    @pytest.mark.parametrize("m", [1, 17])
    def test_level_range(self, m):
        with pytest.raises(TooManyLevels):
            example2_instance(m)

    def test_not_contiguous(self):
        reps = joint_regularity_audit(example2_instance(3))
        assert not all(r.support_contiguous for r in reps.values())


class TestVirtualValues:
    def test_point_mass(self):
        d = DiscreteDist(grid(5), np.array([1.0]))
        np.testing.assert_allclose(virtual_values(d), [5.0])

    def test_equal_revenue(self):
        d = DiscreteDist(grid(1, 2, 4), np.array([0.5, 0.25, 0.25]))
        np.testing.assert_allclose(virtual_values(d), [0, 0, 4], atol=1e-15)

    def test_uniform(self):
        d = DiscreteDist(grid(1, 2), np.array([0.5, 0.5]))
        np.testing.assert_allclose(virtual_values(d), [0, 2])

    def test_three_point_regular(self):
        d = DiscreteDist(grid(1, 2, 3), np.array([0.1, 0.8, 0.1]))
        np.testing.assert_allclose(virtual_values(d), [-8, 1.875, 3])
        assert regularity_audit(d).is_monotone

    def test_irregular_flagged(self):
        d = DiscreteDist(grid(1, 2, 3, 4), np.array([0.45, 0.05, 0.05, 0.45]))
        rep = regularity_audit(d)
        assert not rep.is_monotone and rep.first_violation_index is not None

    def test_er_monotone(self):
        assert regularity_audit(erd_grid(1e6, 200)).is_monotone

    @given(st.lists(st.integers(0, 20), min_size=1, max_size=9).filter(lambda l: sum(l) > 0))
    def test_matches_exact_arithmetic(self, weights):
        n = len(weights)
        pts = np.arange(1, n + 1, dtype=float)
        pmf = np.array(weights, float) / sum(weights)
        phi = virtual_values(DiscreteDist(ValueGrid.from_points(pts), pmf))
        exact = fraction_virtual_values(range(1, n + 1), [Fraction(w, sum(weights)) for w in weights])
        for i, v in exact.items():
            assert phi[i] == pytest.approx(float(v), rel=1e-12, abs=1e-12)
        assert all(np.isnan(phi[i]) for i in range(n) if i not in exact)

    @given(st.lists(st.integers(0, 20), min_size=1, max_size=9).filter(lambda l: sum(l) > 0),
           st.lists(st.floats(0.1, 5.0), min_size=9, max_size=9))
    def test_discrete_myerson_identity(self, weights, gaps):
        n = len(weights)
        pts = np.cumsum(gaps[:n])
        pmf = np.array(weights, float) / sum(weights)
        phi = virtual_values(DiscreteDist(ValueGrid.from_points(pts), pmf))
        sup = np.flatnonzero(pmf > 0)
        for r in range(n):
            above = sup[sup >= r]
            if above.size == 0:
                continue
            r_prime = pts[above[0]]
            lhs = float(np.sum(pmf[above] * phi[above]))
            assert lhs == pytest.approx(r_prime * pmf[above].sum(), rel=1e-9, abs=1e-12)


class TestMixture:
    def test_identity(self):
        inst = example1_instance(4, 0.5, 3)
        mix = mixture_instance([inst], [1.0])
        np.testing.assert_array_equal(mix.mass, inst.mass)
        assert mix.components == 1

    def test_average(self):
        g = grid(1, 2, 4)
        a = build_instance(g, ["*"], erd_grid(4, 3).pmf[:, None])
        b = build_instance(g, ["*"], np.full((3, 1), 1 / 3))
        mix = mixture_instance([a, b], [0.5, 0.5])
        np.testing.assert_allclose(mix.mass[:, 0], 0.5 * (a.mass[:, 0] + b.mass[:, 0]))
        assert mix.components == 2

    def test_incompatible(self):
        a = build_instance(grid(1, 2), ["*"], [[0.5], [0.5]])
        b = build_instance(grid(1, 3), ["*"], [[0.5], [0.5]])
        with pytest.raises(IncompatibleShapes):
            mixture_instance([a, b], [0.5, 0.5])

    def test_modes_kept_apart(self):
        a = build_instance(grid(1, 2), ["*"], [[0.5], [0.5]], Mode.QUADRATURE)
        assert a.mode is Mode.QUADRATURE
        np.testing.assert_allclose(a.density()[:, 0], [0.5, 0.5])
