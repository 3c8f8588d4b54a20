import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privsignal.auctions import MultiBidderInstance, single_bidder_instance
from privsignal.core import (DiscreteDist, Mode, ValueGrid, build_instance, conditional_at, erd_grid,
                             example2_instance, is_jointly_regular, regularity_audit, virtual_values)
from privsignal.duality import (DualWeights, canonical_lagrangian_ceiling, canonical_weights, claim_dual_bound_check,
                                evaluate_lagrangian, gh_fields, lagrangian_bound, lambda_star, lookahead_bound_terms,
                                multibidder_gh, per_signal_bounds, psi_diagnostic)
from privsignal.errors import NegativeWeights, WrongMode
from privsignal.generators import (random_mixture_instance, random_profile_instance, random_regular_instance,
                                   random_regular_profile_instance)
from privsignal.lp_engine import solve_single_buyer
from privsignal.mechanisms import Mechanism
from privsignal.pricing import drev

Q = Mode.QUADRATURE


def single(pts, pmf, mode=Q):
    return build_instance(ValueGrid.from_points(pts), ["*"], np.asarray(pmf, float)[:, None], mode)


class TestFields:
    def test_lambda_star(self):
        assert lambda_star(4, 2) == 0.5
        assert lambda_star(2, 4) == 0.0
        assert lambda_star(0, 0) == 0.0

    def test_wrong_mode(self):
        with pytest.raises(WrongMode):
            gh_fields(single([1, 2], [.5, .5], Mode.MASS))

    def test_top_cell(self):
        inst = random_regular_instance(1, 50)
        f = gh_fields(inst)
        np.testing.assert_allclose(f.g[-1], -inst.density()[-1])

    def test_equal_revenue_h_vanishes_below_atom(self):
        d = erd_grid(1e4, 60)
        f = gh_fields(single(d.grid.points, d.pmf))
        assert np.max(np.abs(f.h[:-1, 0])) <= 1e-12 * np.max(np.abs(f.h))

    def test_h_is_twice_density_times_virtual_value(self):
        inst = random_regular_instance(7, 80)
        f = gh_fields(inst)
        dens = inst.density()
        for j in range(inst.n_signals):
            d = conditional_at(inst, j)
            on = inst.mass[:, j] > 0
            phi = virtual_values(d)
            np.testing.assert_allclose(f.h[on, j], 2 * dens[on, j] * phi[on], rtol=1e-9, atol=1e-12)
            # off the support only the tail-mass term survives
            tail = inst.mass[::-1, j].cumsum()[::-1]
            np.testing.assert_allclose(f.h[~on, j], -2 * tail[~on], rtol=1e-12, atol=1e-15)

    def test_g_riemann_sum(self):
        inst = random_regular_instance(2, 40)
        f = gh_fields(inst)
        t, w, dens = inst.values, inst.grid.widths, inst.density()
        for i in range(t.size):
            ref = -dens[i] + 2 * np.sum((dens[i + 1:] * w[i + 1:, None]) / t[i + 1:, None], axis=0)
            np.testing.assert_allclose(f.g[i], ref, rtol=1e-12, atol=1e-15)


class TestBounds:
    def test_point_mass(self):
        inst = single([3.0], [1.0])
        rep = lagrangian_bound(inst)
        assert rep.lag2_total == pytest.approx(2 * 3.0)
        assert rep.lag2_total >= solve_single_buyer(inst).objective

    def test_equal_revenue_first_inequality_exact(self):
        d = erd_grid(100, 40)
        inst = single(d.grid.points, d.pmf)
        (row,) = per_signal_bounds(inst)
        assert row.pos_h == pytest.approx(2 * row.drev, rel=1e-12)

    def test_uniform_slack(self):
        inst = single(np.arange(1, 201, dtype=float), np.full(200, 1 / 200))
        (row,) = per_signal_bounds(inst)
        assert row.ratio_h <= 2 * 1.05 and row.ratio_tg <= 1.05

    def test_example2_is_irregular(self):
        inst = example2_instance(6, mode=Q)
        rep = lagrangian_bound(inst)
        assert not is_jointly_regular(inst)
        assert not all(b.holds for b in rep.per_signal)

    def test_per_signal_sum(self):
        rep = lagrangian_bound(random_regular_instance(4, 100))
        assert rep.lag2_total == pytest.approx(rep.per_signal_sum, abs=1e-12)

    @given(st.integers(0, 10_000))
    @settings(max_examples=15)
    def test_sandwich_and_chain(self, seed):
        inst = random_regular_instance(seed, 60)
        rep = lagrangian_bound(inst)
        sol = solve_single_buyer(inst)
        lc = evaluate_lagrangian(inst, sol.mechanism, canonical_weights(inst))
        ceiling = canonical_lagrangian_ceiling(inst)
        assert sol.objective <= lc + 1e-7
        assert lc <= ceiling + 1e-9
        assert ceiling <= rep.lag2_total + 1e-12
        assert rep.factor <= 3 * 1.05
        assert all(b.holds for b in rep.per_signal)

    @given(st.integers(0, 10_000))
    @settings(max_examples=10)
    def test_mixture_scaling(self, seed):
        inst = random_mixture_instance(seed, 2, 60)
        rep = lagrangian_bound(inst)
        assert rep.factor <= 6 * 1.05
        assert solve_single_buyer(inst).objective <= rep.lag2_total + 1e-6


class TestPsi:
    def test_regular_contiguous(self):
        for seed in range(10):
            inst = random_regular_instance(seed, 80)
            for s in inst.signals:
                assert psi_diagnostic(inst, s).contiguous

    def test_point_mass_single_sign_change(self):
        inst = single([1, 2, 3, 4], [0, 0, 1, 0])
        assert psi_diagnostic(inst, "*").sign_changes <= 1

    def test_bimodal_flagged(self):
        pmf = np.zeros(40)
        pmf[:3] = 0.3
        pmf[-1] = 0.1
        pmf[20] = 0.0
        inst = single(np.geomspace(1, 200, 40), pmf / pmf.sum())
        rep = psi_diagnostic(inst, "*")
        assert not regularity_audit(conditional_at(inst, 0)).is_regular
        assert not rep.contiguous

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30)
    def test_contiguity_matches_regularity_on_families(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_regular_instance(int(seed % 5000), 50)
        j = int(rng.integers(inst.n_signals))
        assert psi_diagnostic(inst, inst.signals[j]).contiguous
        assert regularity_audit(conditional_at(inst, j)).is_regular


class TestLagrangian:
    def test_zero_weights_equal_revenue(self):
        inst = random_regular_instance(3, 30)
        rng = np.random.default_rng(0)
        mech = Mechanism(rng.random(inst.mass.shape) * (inst.mass > 0), rng.normal(size=inst.mass.shape))
        w = DualWeights(np.zeros((30, 30)), np.zeros(inst.mass.shape))
        assert evaluate_lagrangian(inst, mech, w) == pytest.approx(float(np.sum(inst.mass * mech.p)))

    def test_negative_weights(self):
        with pytest.raises(NegativeWeights):
            DualWeights(-np.ones((2, 2)), np.zeros((2, 1)))

    def test_canonical_on_feasible_mechanism(self):
        inst = random_regular_instance(5, 60)
        sol = solve_single_buyer(inst)
        w = canonical_weights(inst)
        assert np.all(w.lam >= 0) and np.all(w.mu >= 0)
        assert np.all(w.mu[inst.mass == 0] == 0)
        assert evaluate_lagrangian(inst, sol.mechanism, w) >= sol.objective - 1e-7


class TestMultiBidderDuals:
    def test_one_bidder_reduces(self):
        inst = random_regular_instance(9, 30, 1)
        mf = multibidder_gh(single_bidder_instance(inst))
        f = gh_fields(inst)
        np.testing.assert_allclose(mf.g[0][:, 0], f.g[:, 0], rtol=1e-12)
        np.testing.assert_allclose(mf.h[0][:, 0], f.h[:, 0], rtol=1e-12)

    def test_iid_uniform(self):
        g = ValueGrid.from_points([1.0, 2.0])
        mi = MultiBidderInstance((g, g), np.full((2, 2), 0.25), Q)
        mf = multibidder_gh(mi)
        np.testing.assert_allclose(mf.g[0][-1], -mf.f[0][-1])
        assert lookahead_bound_terms(mi).second_price_term == pytest.approx(2.5)

    def test_wrong_mode(self):
        g = ValueGrid.from_points([1.0, 2.0])
        with pytest.raises(WrongMode):
            multibidder_gh(MultiBidderInstance((g, g), np.full((2, 2), 0.25)))

    @given(st.integers(0, 2**32 - 1))
    def test_claim_everywhere(self, seed):
        assert claim_dual_bound_check(random_profile_instance(seed, dims=(5, 4))) <= 1e-9

    def test_single_bidder_terms(self):
        inst = random_regular_instance(11, 40, 1)
        terms = lookahead_bound_terms(single_bidder_instance(inst))
        assert terms.second_price_term == 0
        assert terms.winner_term == pytest.approx(canonical_lagrangian_ceiling(inst), rel=1e-12)

    def test_winner_term_against_lookahead(self):
        from privsignal.auctions import lookahead_auction
        for seed in range(5):
            mi = random_regular_profile_instance(seed)
            la = lookahead_auction(mi)
            terms = lookahead_bound_terms(mi)
            assert terms.winner_term <= 3 * la.revenue * 1.05
            with_mech = lookahead_bound_terms(mi, la.mechanism)
            assert with_mech.winner_term <= terms.winner_term + 1e-12
