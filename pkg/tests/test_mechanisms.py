from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings

import oracles
from admission_auctions.core import BidProfile, DropSchedule, Outcome
from admission_auctions.mechanisms import (
    MechanismError,
    MechanismId,
    admittance,
    highest_winning_bid,
    m1_m2,
    m_bar,
    run,
    run_abar_distribution,
    run_abar_sampled,
    run_astar,
    run_f,
    run_t,
    supremum_winning_bid,
)
from conftest import bids_strategy

F = Fraction
EXAMPLE = BidProfile.of("0.5", "0.4", "0.3", "0.4")
D01 = DropSchedule.constant("0.1", 10)


def outcomes(dist):
    return {(tuple(sorted(o.winners)), tuple(sorted(set(o.rate_of.values())))): p for o, p in dist}


class TestMBar:
    @pytest.mark.parametrize(
        "bids, expected", [(("0.5", "0.4", "0.3", "0.4"), 2), (("0.7",), 1), (("0.1", "0.1", "0.9"), 1)]
    )
    def test_values(self, bids, expected):
        assert m_bar(BidProfile.of(*bids)) == expected

    @given(bids_strategy())
    def test_matches_definition(self, bids):
        n = len(bids)
        sigma = sorted(bids) + [F(1)]
        assert m_bar(BidProfile(tuple(bids))) == max(m for m in range(1, n + 1) if m * sigma[m] <= 1)


class TestAbar:
    def test_example_one(self):
        dist = run_abar_distribution(EXAMPLE)
        assert outcomes(dist) == {((2, 3), (F(2, 5),)): F(1, 2), ((3, 4), (F(2, 5),)): F(1, 2)}

    def test_single_user_gets_pseudo_rate(self):
        dist = run_abar_distribution(BidProfile.of("0.7"))
        assert outcomes(dist) == {((1,), (F(1),)): F(1)}

    def test_two_way_tie(self):
        dist = run_abar_distribution(BidProfile.of("0.5", "0.5"))
        assert outcomes(dist) == {((1,), (F(1, 2),)): F(1, 2), ((2,), (F(1, 2),)): F(1, 2)}

    @given(bids_strategy(max_size=5))
    def test_matches_arrangement_enumeration(self, bids):
        assert oracles.as_dict(run_abar_distribution(BidProfile(tuple(bids)))) == oracles.abar_by_arrangements(bids)

    @given(bids_strategy())
    def test_rate_is_lowest_losing_bid(self, bids):
        p = BidProfile(tuple(bids))
        m = m_bar(p)
        price = (sorted(bids) + [F(1)])[m]
        assert m * price <= 1
        for o, _ in run_abar_distribution(p):
            assert len(o) == m and set(o.rate_of.values()) == {price}


class TestSampling:
    def test_support_membership(self):
        assert run_abar_sampled(EXAMPLE, 7) in {o for o, _ in run_abar_distribution(EXAMPLE)}

    def test_deterministic_support(self):
        for seed in range(5):
            assert run_abar_sampled(BidProfile.of("0.7"), seed) == Outcome.single_price([1], F(1))

    def test_same_seed_same_outcome(self):
        assert run_abar_sampled(EXAMPLE, 11) == run_abar_sampled(EXAMPLE, 11)

    def test_empirical_frequency(self):
        p = BidProfile.of("0.5", "0.5")
        trials = 10_000
        wins = Counter(run_abar_sampled(p, seed).winners for seed in range(1, trials + 1))
        freq = wins[frozenset({1})] / trials
        se = (0.25 / trials) ** 0.5
        assert abs(freq - 0.5) <= 3 * se


class TestSupremum:
    @pytest.mark.parametrize(
        "others, expected", [(("0.4", "0.3", "0.4"), F(2, 5)), (("0.8", "0.9"), F(4, 5)), ((), F(1))]
    )
    def test_values(self, others, expected):
        assert supremum_winning_bid(tuple(F(x) for x in others)) == expected

    @given(bids_strategy(min_size=0, max_size=4))
    def test_matches_probing_abar(self, others):
        z = supremum_winning_bid(others)
        assert z == oracles.supremum_by_probing(others)
        if z > 0:
            # the supremum is approached from below by winning bids
            assert oracles.win_probability(others, z - F(1, 10**12)) > 0

    @given(bids_strategy(min_size=0))
    def test_equals_sigma_m1(self, others):
        m1, _ = oracles.m1_m2_by_definition(others)
        assert supremum_winning_bid(others) == ([F(0)] + sorted(others) + [F(1)])[m1]


class TestM1M2:
    @pytest.mark.parametrize(
        "others, expected", [(("0.4", "0.3", "0.4"), (2, 1)), (("0.1", "0.9"), (1, 1)), (("0.5", "0.5"), (2, 1))]
    )
    def test_values(self, others, expected):
        assert m1_m2(tuple(F(x) for x in others)) == expected

    @given(bids_strategy(min_size=0, max_size=8))
    def test_matches_definition(self, others):
        m1, m2 = m1_m2(others)
        assert (m1, m2) == oracles.m1_m2_by_definition(others)
        assert m2 <= m1


class TestHighestWinningBid:
    def test_example_two(self):
        z = highest_winning_bid((F(2, 5), F(3, 10), F(2, 5)), D01)
        assert z == F(59, 150)
        assert round(float(z), 4) == 0.3933

    def test_three_user_drop(self):
        assert highest_winning_bid((F(4, 5), F(9, 10)), D01) == F(77, 100)

    def test_three_user_no_drop(self):
        assert highest_winning_bid((F(1, 10), F(9, 10)), D01) == F(1, 10)

    def test_single_user(self):
        assert highest_winning_bid((), DropSchedule(())) == 1

    @given(bids_strategy(min_size=0, max_size=7), bids_strategy(min_size=7, max_size=7))
    def test_matches_case_split(self, others, raw_drops):
        drops = DropSchedule(tuple(min(max(d, F(1, 100)), F(99, 100)) for d in raw_drops))
        assert highest_winning_bid(others, drops) == oracles.threshold_by_cases(others, drops)

    @given(bids_strategy(min_size=1, max_size=7))
    def test_range_and_drop_interval(self, others):
        z = highest_winning_bid(others, D01)
        zbar = supremum_winning_bid(others)
        m1, m2 = m1_m2(others)
        assert 0 <= z <= 1
        if m1 != m2:
            assert F(1, m1 + 1) < z < zbar
        else:
            assert z == zbar


class TestAstar:
    def test_example_two(self):
        assert run_astar(EXAMPLE, D01) == Outcome.single_price([3], F(59, 150))

    def test_two_low_bidders(self):
        assert run_astar(BidProfile.of("0.1", "0.1", "0.9"), D01) == Outcome.single_price([1, 2], F(1, 10))

    def test_all_equal_admits_none(self):
        p = BidProfile.of("0.5", "0.5", "0.5")
        assert highest_winning_bid((F(1, 2), F(1, 2)), D01) == F(29, 60)
        assert len(run_astar(p, D01)) == 0

    def test_0_79_rejected(self):
        assert 1 not in run_astar(BidProfile.of("0.79", "0.8", "0.9"), D01).winners

    def test_short_schedule_rejected(self):
        with pytest.raises(MechanismError):
            run_astar(EXAMPLE, DropSchedule.constant("0.1", 3))

    @given(bids_strategy(max_size=7))
    def test_win_iff_below_threshold(self, bids):
        p = BidProfile(tuple(bids))
        o = run_astar(p, D01)
        rates = set(o.rate_of.values())
        assert len(rates) <= 1
        assert o.total_rate() <= 1
        for i in p.users():
            z = highest_winning_bid(p.others(i), D01)
            assert (i in o.winners) == (p.bid(i) <= z)
            if i in o.winners:
                assert o.rate(i) == z


class TestBaselines:
    def test_f_all_equal(self):
        dist = run_f(BidProfile.of("0.5", "0.5", "0.5"))
        assert len(dist) == 3
        assert all(p == F(1, 3) and len(o) == 2 and set(o.rate_of.values()) == {F(1, 2)} for o, p in dist)

    def test_f_single(self):
        assert outcomes(run_f(BidProfile.of("0.7"))) == {((1,), (F(7, 10),)): 1}

    def test_f_example(self):
        assert outcomes(run_f(EXAMPLE)) == {((2, 3), (F(2, 5),)): F(1, 2), ((3, 4), (F(2, 5),)): F(1, 2)}

    def test_t_tight_instance(self):
        p = BidProfile.of(0, 0, 0, "0.5", "0.5")
        (o, prob), = run_t(p)
        assert prob == 1 and o.rate_of == {i: p.bid(i) for i in p.users()}

    def test_t_single(self):
        assert outcomes(run_t(BidProfile.of("0.7"))) == {((1,), (F(7, 10),)): 1}

    def test_t_example(self):
        dist = run_t(EXAMPLE)
        assert {tuple(sorted(o.winners)): p for o, p in dist} == {(2, 3): F(1, 2), (3, 4): F(1, 2)}
        for o, _ in dist:
            assert o.rate_of == {i: EXAMPLE.bid(i) for i in o.winners}

    @given(bids_strategy(max_size=5))
    def test_f_matches_oracles(self, bids):
        dist = run_f(BidProfile(tuple(bids)))
        assert oracles.as_dict(dist) == oracles.f_by_arrangements(bids)
        assert admittance(dist) == oracles.max_feasible_single_price(bids)

    @given(bids_strategy(max_size=5))
    def test_t_matches_oracles(self, bids):
        dist = run_t(BidProfile(tuple(bids)))
        assert oracles.as_dict(dist) == oracles.t_by_arrangements(bids)
        assert admittance(dist) == oracles.max_feasible_own_price(bids)


class TestAdmittance:
    def test_example_one(self):
        assert admittance(run_abar_distribution(EXAMPLE)) == 2

    @pytest.mark.parametrize("mech", list(MechanismId))
    def test_single_user(self, mech):
        assert admittance(run(mech, BidProfile.of("0.7"), DropSchedule(()))) == 1

    def test_f_all_equal(self):
        assert admittance(run_f(BidProfile.of("0.5", "0.5", "0.5"))) == 2

    def test_astar_needs_drops(self):
        with pytest.raises(MechanismError):
            run(MechanismId.ASTAR, EXAMPLE)
