from fractions import Fraction

import pytest

from admission_auctions.core import BidProfile, DropSchedule, InputError
from admission_auctions.mechanisms import highest_winning_bid, supremum_winning_bid
from admission_auctions import experiments as ex

F = Fraction


def diverges_by_definition(profile, drops):
    return any(
        highest_winning_bid(profile.others(i), drops) < profile.bid(i) < supremum_winning_bid(profile.others(i))
        for i in profile.users()
    )


class TestSampling:
    def test_deterministic(self):
        assert list(ex.uniform_profiles(3, 20, seed=9)) == list(ex.uniform_profiles(3, 20, seed=9))

    def test_lattice_and_range(self):
        for p in ex.uniform_profiles(4, 50, seed=1):
            assert all(0 <= b < 1 and (b * ex.DENOMINATOR).denominator == 1 for b in p)

    def test_prefix_stable(self):
        # sample k does not depend on how many samples were requested after it
        short = list(ex.uniform_profiles(3, 5, seed=2))
        assert list(ex.uniform_profiles(3, 50, seed=2))[:5] == short


class TestDivergence:
    def test_fast_check_matches_definition(self):
        d = DropSchedule.constant("0.3", 5)
        for p in ex.uniform_profiles(5, 400, seed=4):
            assert ex.diverges(p, d) == diverges_by_definition(p, d)

    def test_window_is_strict(self):
        d = DropSchedule.constant("0.1", 3)
        # 29/60 < 0.49 < 1/2 for user 1
        assert ex.diverges(BidProfile.of("0.49", "0.5", "0.5"), d)
        # bids equal to the supremum sit on the boundary, outside the strict window
        assert not ex.diverges(BidProfile.of("0.5", "0.5", "0.5"), d)
        assert not ex.diverges(BidProfile.of("0.1", "0.1", "0.9"), d)

    def test_n4_within_bound(self):
        est = ex.estimate_divergence(4, DropSchedule.constant("0.01", 4), 10_000, seed=42)
        assert est.analytic_bound == F(1, 25)
        assert est.within_bound()

    def test_n2_matches_exact_probability(self):
        # n = 2: user i diverges iff t_other > 1/2 and t_i falls in a window of width d (t_other - 1/2)
        d = F(1, 5)
        est = ex.estimate_divergence(2, DropSchedule.constant(d, 2), 20_000, seed=7)
        assert abs(float(est.point_estimate) - float(d / 4)) <= 4 * est.standard_error

    def test_zero_drop_rejected(self):
        with pytest.raises(InputError):
            ex.estimate_divergence(2, DropSchedule((F(0),)), 10, seed=0)

    def test_short_schedule_rejected(self):
        with pytest.raises(InputError):
            ex.estimate_divergence(4, DropSchedule.constant("0.1", 3), 10, seed=0)

    def test_summary_fields(self):
        est = ex.DivergenceEstimate(5, F(1, 50), 100_000, 300)
        out = est.to_dict()
        assert out["analytic_bound"] == "0.1" and out["point_estimate"] == 0.003 and out["passed"]


class TestInstances:
    @pytest.mark.parametrize("m", [1, 2, 10])
    def test_tight(self, m):
        p = ex.tight_scalability_instance(m)
        a, _, _, t = ex.admittances(p, DropSchedule.constant("0.1", p.n))
        assert p.n == 2 * m + 1 and a == m and t == 2 * m + 1 and a == t // 2

    def test_tight_m2_profile(self):
        assert ex.tight_scalability_instance(2).bids == (0, 0, 0, F(1, 2), F(1, 2))

    @pytest.mark.parametrize("n, m", [(3, 2), (10, 9), (5, 1)])
    def test_worst_case(self, n, m):
        p = ex.worst_case_astar_instance(n, m)
        _, s, f, _ = ex.admittances(p, DropSchedule.constant("0.1", n))
        assert s == 0 and f == m

    @pytest.mark.parametrize("n, m", [(2, 2), (3, 5), (3, 0)])
    def test_worst_case_rejected(self, n, m):
        with pytest.raises(InputError):
            ex.worst_case_astar_instance(n, m)


class TestSweep:
    def test_rows_satisfy_bounds(self):
        rows = ex.admittance_sweep(5, 1000, seed=1, drops=DropSchedule.constant("0.1", 5))
        assert len(rows) == 1000
        for r in rows:
            assert r.f - 1 <= r.abar <= r.f
            assert r.abar >= r.t // 2 and r.astar <= r.t and r.abar <= r.t

    def test_single_user(self):
        rows = ex.admittance_sweep(1, 10, seed=0, drops=DropSchedule(()))
        assert all((r.abar, r.astar, r.f, r.t) == (1, 1, 1, 1) for r in rows)

    def test_smaller_drop_admits_more(self):
        def stats(d):
            rows = ex.admittance_sweep(5, 1000, seed=1, drops=DropSchedule.constant(d, 5))
            return ex.sweep_means(rows)["astar"], ex.sweep_std_errors(rows)["astar"]

        small, se_small = stats("0.001")
        large, se_large = stats("0.2")
        assert float(small) >= float(large) - 3 * (se_small**2 + se_large**2) ** 0.5

    def test_csv_byte_identical(self):
        d = DropSchedule.constant("0.1", 4)
        a = ex.sweep_csv(ex.admittance_sweep(4, 50, seed=3, drops=d))
        b = ex.sweep_csv(ex.admittance_sweep(4, 50, seed=3, drops=d))
        assert a == b
        lines = a.splitlines()
        assert lines[0] == "sample,abar,astar,f,t" and lines[-1].startswith("mean,") and len(lines) == 52
