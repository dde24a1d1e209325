"""Admission-control auctions on normalised bid profiles.

Four mechanisms are provided:

* ``ABAR``: admit the largest prefix of low bidders that can all be charged the
  lowest losing bid. Ties at the cut-off are broken uniformly at random.
* ``ASTAR``: the deterministic, truthful refinement. Each user faces a
  threshold computed from the other bids only and wins iff its bid is at or
  below that threshold.
* ``F`` and ``T``: omniscient single-price and own-bid-price baselines.

Randomised mechanisms return the exact ``OutcomeDistribution``.
"""

from __future__ import annotations

import enum
import random
from bisect import bisect_left
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Callable, Sequence

from .core import (
    ONE,
    ZERO,
    BidProfile,
    DropSchedule,
    Outcome,
    OutcomeDistribution,
    sort_with_pseudo,
)


class MechanismId(enum.Enum):
    ABAR = "abar"
    ASTAR = "astar"
    F_OMNISCIENT = "f"
    T_OMNISCIENT = "t"

    @classmethod
    def parse(cls, name: str) -> MechanismId:
        aliases = {"abar": cls.ABAR, "astar": cls.ASTAR, "f": cls.F_OMNISCIENT, "t": cls.T_OMNISCIENT}
        try:
            return aliases[name.lower()]
        except KeyError:
            raise ValueError(f"unknown mechanism {name!r}") from None

    @property
    def deterministic(self) -> bool:
        return self is MechanismId.ASTAR

    @property
    def single_priced(self) -> bool:
        return self is not MechanismId.T_OMNISCIENT


class MechanismError(ValueError):
    pass


def _last_fit(values: Sequence[Fraction], weight: int, start: int) -> int:
    """Largest j >= start with (j + weight) * values[j] <= 1, assuming it holds at ``start``.

    (j + weight) * values[j] is non-decreasing in j for sorted non-negative
    values, so an upward scan may stop at the first miss.
    """
    j = start
    while j + 1 < len(values) and (j + 1 + weight) * values[j + 1] <= 1:
        j += 1
    return j


def m_bar(profile: BidProfile) -> int:
    """Largest m in 1..n with m * sigma_{m+1} <= 1."""
    sigma = sort_with_pseudo(profile).sigma
    # sigma[m] is sigma_{m+1}; 1 * sigma_2 <= 1 always holds
    return _last_fit(sigma, 0, 1)


def _lowest_k(profile: BidProfile, k: int, rates: Callable[[frozenset[int]], dict[int, Fraction]]) -> OutcomeDistribution:
    """Admit the k lowest bidders, splitting a tie at rank k uniformly."""
    if k == 0:
        return OutcomeDistribution.certain(Outcome())
    cutoff = sorted(profile.bids)[k - 1]
    below = [i for i in profile.users() if profile.bid(i) < cutoff]
    tied = [i for i in profile.users() if profile.bid(i) == cutoff]
    outcomes = []
    for chosen in combinations(tied, k - len(below)):
        winners = frozenset(below).union(chosen)
        outcomes.append(Outcome.from_mapping(rates(winners)))
    return OutcomeDistribution.uniform(outcomes)


def run_abar_distribution(profile: BidProfile) -> OutcomeDistribution:
    m = m_bar(profile)
    price = sort_with_pseudo(profile).sigma_at(m + 1)
    return _lowest_k(profile, m, lambda w: {i: price for i in w})


def sample_outcome(dist: OutcomeDistribution, seed: int) -> Outcome:
    """Draw one outcome exactly: an integer in [0, L) over the common denominator L."""
    common = lcm(*(p.denominator for _, p in dist))
    ticket = random.Random(seed).randrange(common)
    acc = 0
    for outcome, p in dist:
        acc += p.numerator * (common // p.denominator)
        if ticket < acc:
            return outcome
    raise AssertionError("probabilities sum to 1")


def run_abar_sampled(profile: BidProfile, seed: int) -> Outcome:
    return sample_outcome(run_abar_distribution(profile), seed)


def _others_sigma(others: Sequence[Fraction]) -> list[Fraction]:
    """sigma_0..sigma_n of a reduced profile: 0, sorted others, then 1."""
    return [ZERO, *sorted(others), ONE]


def supremum_winning_bid(others: Sequence[Fraction]) -> Fraction:
    """max{sigma_j : j * sigma_j <= 1} over the others' sorted bids plus the 1 entry."""
    s = _others_sigma(others)
    return max(s[j] for j in range(1, len(s)) if j * s[j] <= 1)


def m1_m2_sorted(s: Sequence[Fraction]) -> tuple[int, int]:
    # j = 0 qualifies for both since sigma_0 = 0
    return _last_fit(s, 0, 0), _last_fit(s, 1, 0)


def m1_m2(others: Sequence[Fraction]) -> tuple[int, int]:
    """(max j with j * sigma_j <= 1, max j with (j + 1) * sigma_j <= 1) over j = 0..n."""
    return m1_m2_sorted(_others_sigma(others))


def threshold_from_sigma(s: Sequence[Fraction], drops: DropSchedule) -> Fraction:
    if len(s) == 2:
        # n = 1: no d_1 exists; the sole bidder is always admitted at rate 1
        return ONE
    m1, m2 = m1_m2_sorted(s)
    z = s[m1]
    if m1 == m2:
        return z
    d = drops.at(m1)
    return z * (1 - d) + d / (m1 + 1)


def highest_winning_bid(others: Sequence[Fraction], drops: DropSchedule) -> Fraction:
    """Threshold for a user facing ``others``: the supremum bid, dropped when m1 != m2."""
    return threshold_from_sigma(_others_sigma(others), drops)


def reduced_sigmas(profile: BidProfile) -> dict[Fraction, list[Fraction]]:
    """sigma_0..sigma_n of the reduced profile for each distinct bid value.

    Users with equal bids face the same multiset of other bids.
    """
    ordered = sorted(profile.bids)
    out = {}
    for b in set(ordered):
        k = bisect_left(ordered, b)
        out[b] = [ZERO, *ordered[:k], *ordered[k + 1 :], ONE]
    return out


def astar_thresholds(profile: BidProfile, drops: DropSchedule) -> dict[int, Fraction]:
    if not drops.covers(profile.n):
        raise MechanismError(f"drop schedule of length {len(drops.d)} does not cover n = {profile.n}")
    by_bid = {b: threshold_from_sigma(s, drops) for b, s in reduced_sigmas(profile).items()}
    return {i: by_bid[profile.bid(i)] for i in profile.users()}


def run_astar(profile: BidProfile, drops: DropSchedule) -> Outcome:
    z = astar_thresholds(profile, drops)
    return Outcome.from_mapping({i: z[i] for i in profile.users() if profile.bid(i) <= z[i]})


def m_f(profile: BidProfile) -> int:
    """Largest m in 1..n with m * sigma_m <= 1 (m = 1 always qualifies)."""
    sigma = sort_with_pseudo(profile).sigma
    # sigma[j] is sigma_{j+1}, so weight 1 turns the test into (j + 1) * sigma_{j+1}
    return _last_fit(sigma[:-1], 1, 0) + 1


def run_f(profile: BidProfile) -> OutcomeDistribution:
    m = m_f(profile)
    price = sort_with_pseudo(profile).sigma_at(m)
    return _lowest_k(profile, m, lambda w: {i: price for i in w})


def m_t(profile: BidProfile) -> int:
    """Longest prefix of sorted bids whose sum fits in unit capacity."""
    total, m = ZERO, 0
    for b in sorted(profile.bids):
        total += b
        if total > 1:
            break
        m += 1
    return m


def run_t(profile: BidProfile) -> OutcomeDistribution:
    return _lowest_k(profile, m_t(profile), lambda w: {i: profile.bid(i) for i in w})


def admittance(dist: OutcomeDistribution) -> Fraction:
    return sum((p * len(o) for o, p in dist), ZERO)


def run(mech: MechanismId, profile: BidProfile, drops: DropSchedule | None = None) -> OutcomeDistribution:
    """Any mechanism as an exact outcome distribution (ASTAR gives a point mass)."""
    if mech is MechanismId.ASTAR:
        if drops is None:
            raise MechanismError("ASTAR requires a drop schedule")
        return OutcomeDistribution.certain(run_astar(profile, drops))
    if mech is MechanismId.ABAR:
        return run_abar_distribution(profile)
    if mech is MechanismId.F_OMNISCIENT:
        return run_f(profile)
    return run_t(profile)

