"""Executable checks for feasibility, truthfulness and the admittance bounds.

Every check returns a ``PropertyReport``. A failing report carries a
counterexample that can be re-checked on its own, e.g. by recomputing both
payoffs with ``evaluate_expected_utility``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Sequence

from .core import (
    ONE,
    ZERO,
    BidProfile,
    DropSchedule,
    OutcomeDistribution,
    UtilitySpec,
    format_probability,
    format_rate,
    parse_rate,
    profile_from_others,
)
from .mechanisms import (
    MechanismError,
    MechanismId,
    admittance,
    highest_winning_bid,
    run,
    run_abar_distribution,
    run_astar,
    run_f,
    run_t,
)

Lottery = tuple[tuple[Fraction, Fraction], ...]


@dataclass(frozen=True)
class Counterexample:
    profile: tuple[Fraction, ...]
    user: int | None = None
    deviation: Fraction | None = None
    utility: UtilitySpec | None = None
    truthful_payoff: Fraction | None = None
    deviating_payoff: Fraction | None = None
    reason: str = ""

    def to_dict(self) -> dict[str, Any]:
        opt = lambda v: None if v is None else format_rate(v)  # noqa: E731
        return {
            "profile": [format_rate(b) for b in self.profile],
            "user": self.user,
            "deviation": opt(self.deviation),
            "utility": None if self.utility is None else self.utility.to_dict(),
            "truthful_payoff": opt(self.truthful_payoff),
            "deviating_payoff": opt(self.deviating_payoff),
            "reason": self.reason,
        }


@dataclass
class PropertyReport:
    property_id: str
    passed: bool
    mechanism: str | None = None
    checked: int = 0
    violations: int = 0
    counterexample: Counterexample | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.passed and self.counterexample is None:
            raise ValueError("a failing report needs a counterexample")

    def to_dict(self) -> dict[str, Any]:
        return {
            "property": self.property_id,
            "mechanism": self.mechanism,
            "passed": self.passed,
            "checked": self.checked,
            "violations": self.violations,
            "params": self.params,
            "counterexample": None if self.counterexample is None else self.counterexample.to_dict(),
        }


def _report(property_id: str, mech: MechanismId | None, failure: Counterexample | None, **params: Any) -> PropertyReport:
    return PropertyReport(
        property_id,
        failure is None,
        mechanism=None if mech is None else mech.value,
        checked=1,
        violations=0 if failure is None else 1,
        counterexample=failure,
        params=params,
    )


def merge_reports(property_id: str, reports: Iterable[PropertyReport], **params: Any) -> PropertyReport:
    """Fold many single-instance reports; the first failure is kept."""
    checked = violations = 0
    first = None
    mech = None
    for r in reports:
        mech = mech or r.mechanism
        checked += r.checked
        violations += r.violations
        if first is None and r.counterexample is not None:
            first = r.counterexample
    return PropertyReport(property_id, violations == 0, mech, checked, violations, first, params)


@dataclass(frozen=True)
class BidGrid:
    """The bid values {0, 1/k, ..., 1}."""

    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("grid needs k >= 1")

    @classmethod
    def parse(cls, text: str) -> BidGrid:
        step = parse_rate(text)
        if step <= 0 or step.numerator != 1:
            raise ValueError(f"grid step must be 1/k, got {text!r}")
        return cls(step.denominator)

    @property
    def step(self) -> Fraction:
        return Fraction(1, self.k)

    def points(self) -> list[Fraction]:
        return [Fraction(j, self.k) for j in range(self.k + 1)]

    def profiles(self, n: int, distinct_only: bool = False) -> Iterator[tuple[Fraction, ...]]:
        for bids in itertools.product(self.points(), repeat=n):
            if distinct_only and len(set(bids)) != n:
                continue
            yield bids


def utility_family(grid: BidGrid, kinds: Sequence[str] = ("step", "capped_linear")) -> list[UtilitySpec]:
    """Step utility plus one capped-linear utility per positive grid knee."""
    family = []
    if "step" in kinds:
        family.append(UtilitySpec.step())
    if "capped_linear" in kinds:
        family.extend(UtilitySpec.capped_linear(r) for r in grid.points() if r > 0)
    return family


def _need_drops(mech: MechanismId, drops: DropSchedule | None) -> None:
    if mech is MechanismId.ASTAR and drops is None:
        raise MechanismError("ASTAR checks need a drop schedule")


# -- feasibility and structure ---------------------------------------------


def _feasibility_failure(dist: OutcomeDistribution, profile: BidProfile) -> Counterexample | None:
    bids = profile.bids
    if any(p < 0 for _, p in dist) or sum((p for _, p in dist), ZERO) != ONE:
        return Counterexample(bids, reason="P: probabilities are negative or do not sum to 1")
    for outcome, _ in dist:
        if outcome.total_rate() > 1:
            return Counterexample(bids, reason=f"CC: rates sum to {format_rate(outcome.total_rate())}")
        for i, r in outcome.rates:
            if r < 0:
                return Counterexample(bids, user=i, reason="CC: negative rate")
            if r < profile.bid(i):
                return Counterexample(bids, user=i, reason=f"IR: rate {format_rate(r)} below bid")
    return None


def check_feasibility(mech: MechanismId, profile: BidProfile, drops: DropSchedule | None = None) -> PropertyReport:
    _need_drops(mech, drops)
    return _report("feasibility", mech, _feasibility_failure(run(mech, profile, drops), profile))


def _single_price_failure(dist: OutcomeDistribution, profile: BidProfile) -> Counterexample | None:
    for outcome, _ in dist:
        if len({r for _, r in outcome.rates}) > 1:
            return Counterexample(profile.bids, reason="winners receive different rates")
    return None


def check_single_price(mech: MechanismId, profile: BidProfile, drops: DropSchedule | None = None) -> PropertyReport:
    _need_drops(mech, drops)
    return _report("single-price", mech, _single_price_failure(run(mech, profile, drops), profile))


def _all_or_none_failure(winners: frozenset[int], profile: BidProfile) -> Counterexample | None:
    groups: dict[Fraction, set[int]] = {}
    for i in profile.users():
        groups.setdefault(profile.bid(i), set()).add(i)
    for bid, users in groups.items():
        admitted = users & winners
        if admitted and admitted != users:
            return Counterexample(
                profile.bids, user=min(users - admitted), reason=f"equal bids {format_rate(bid)} split"
            )
    return None


def check_all_or_none(profile: BidProfile, drops: DropSchedule) -> PropertyReport:
    """Users with identical bids are admitted together or not at all."""
    winners = run_astar(profile, drops).winners
    return _report("all-or-none", MechanismId.ASTAR, _all_or_none_failure(winners, profile))


def _scalability_failure(abar: Fraction, f: Fraction, t: Fraction, profile: BidProfile) -> Counterexample | None:
    if abar < math.floor(t / 2):
        return Counterexample(profile.bids, reason=f"|Abar| = {format_rate(abar)} < floor(|T| / 2), |T| = {format_rate(t)}")
    if not f - 1 <= abar <= f:
        return Counterexample(profile.bids, reason=f"|Abar| = {format_rate(abar)} outside [|F| - 1, |F|], |F| = {format_rate(f)}")
    return None


def check_scalability(profile: BidProfile) -> PropertyReport:
    """|Abar| >= floor(|T| / 2) and |F| - 1 <= |Abar| <= |F|."""
    abar = admittance(run_abar_distribution(profile))
    f = admittance(run_f(profile))
    t = admittance(run_t(profile))
    report = _report("scalability", MechanismId.ABAR, _scalability_failure(abar, f, t, profile))
    report.params = {"abar": format_rate(abar), "f": format_rate(f), "t": format_rate(t)}
    return report


def structural_checks(profile: BidProfile, drops: DropSchedule) -> list[PropertyReport]:
    """Feasibility of all four mechanisms, single price, all-or-none, sandwich and scalability.

    Each mechanism runs once per profile; the reports share those results.
    """
    dists = {m: run(m, profile, drops) for m in MechanismId}
    reports = [_report("feasibility", m, _feasibility_failure(d, profile)) for m, d in dists.items()]
    reports += [
        _report("single-price", m, _single_price_failure(dists[m], profile))
        for m in (MechanismId.ABAR, MechanismId.ASTAR, MechanismId.F_OMNISCIENT)
    ]
    astar_winners = dists[MechanismId.ASTAR].entries[0][0].winners
    reports.append(_report("all-or-none", MechanismId.ASTAR, _all_or_none_failure(astar_winners, profile)))
    a, f, t = (admittance(dists[m]) for m in (MechanismId.ABAR, MechanismId.F_OMNISCIENT, MechanismId.T_OMNISCIENT))
    reports.append(_report("scalability", MechanismId.ABAR, _scalability_failure(a, f, t, profile)))
    return reports


def structural_sweep(profiles: Iterable[BidProfile], drops_for: Callable[[int], DropSchedule]) -> list[PropertyReport]:
    """Run ``structural_checks`` over many profiles and merge by property.

    ``drops_for(n)`` returns the drop schedule for an n-user profile.
    """
    merged: dict[tuple[str, str | None], list[PropertyReport]] = {}
    for profile in profiles:
        for r in structural_checks(profile, drops_for(profile.n)):
            merged.setdefault((r.property_id, r.mechanism), []).append(r)
    return [merge_reports(pid, reports) for (pid, _), reports in merged.items()]


def _permutations(n: int, limit: int | None, seed: int) -> Iterator[tuple[int, ...]]:
    if limit is None and n > 8:
        limit = 1000
    if limit is None:
        yield from itertools.permutations(range(1, n + 1))
        return
    rng = random.Random(seed)
    for _ in range(limit):
        perm = list(range(1, n + 1))
        rng.shuffle(perm)
        yield tuple(perm)


def check_permutation_equivariance(
    mech: MechanismId,
    profile: BidProfile,
    drops: DropSchedule | None = None,
    max_permutations: int | None = None,
    seed: int = 0,
) -> PropertyReport:
    """Relabelling the bidders relabels the outcome distribution and nothing else.

    All n! permutations are tried for n <= 8, otherwise a seeded sample.
    """
    _need_drops(mech, drops)
    base = run(mech, profile, drops)
    checked = 0
    for perm in _permutations(profile.n, max_permutations, seed):
        checked += 1
        if run(mech, profile.permuted(perm), drops) != base.relabel(perm):
            failure = Counterexample(profile.bids, reason=f"permutation {list(perm)} changes the outcome")
            return PropertyReport("anonymity", False, mech.value, checked, 1, failure)
    return PropertyReport("anonymity", True, mech.value, checked)


# -- truthfulness -----------------------------------------------------------


def _lottery(mech: MechanismId, others: Sequence[Fraction], bid: Fraction, user: int, drops: DropSchedule | None) -> Lottery:
    return run(mech, profile_from_others(others, bid, user), drops).lottery(user)


def _payoff(lottery: Lottery, q: Fraction, u: UtilitySpec) -> Fraction:
    return sum((u(q, rate) * p for rate, p in lottery), ZERO)


def evaluate_expected_utility(
    mech: MechanismId,
    true_value: Fraction,
    bid: Fraction,
    others: Sequence[Fraction],
    u: UtilitySpec,
    drops: DropSchedule | None = None,
    user: int | None = None,
) -> Fraction:
    """Expected utility of a user needing ``true_value`` who bids ``bid`` against ``others``."""
    _need_drops(mech, drops)
    pos = len(others) + 1 if user is None else user
    return _payoff(_lottery(mech, others, bid, pos, drops), true_value, u)


def brute_force_ic(
    mech: MechanismId,
    grid: BidGrid,
    n: int,
    utilities: Sequence[UtilitySpec] | None = None,
    drops: DropSchedule | None = None,
    distinct_only: bool = False,
) -> PropertyReport:
    """Search every grid profile, user, deviation and utility for a profitable lie.

    With ``distinct_only`` the true profiles are restricted to pairwise-distinct
    bids (deviations may still create ties); this is the weak form of the check.
    Violations are visited in lexicographic (profile, user, deviation) order and
    the first one is reported.
    """
    _need_drops(mech, drops)
    utilities = list(utility_family(grid) if utilities is None else utilities)
    points = grid.points()
    lotteries: dict[tuple[int, tuple[Fraction, ...], Fraction], Lottery] = {}
    payoffs: dict[tuple[Lottery, Fraction], tuple[Fraction, ...]] = {}

    def lottery(i: int, others: tuple[Fraction, ...], s: Fraction) -> Lottery:
        key = (i, others, s)
        if key not in lotteries:
            lotteries[key] = _lottery(mech, others, s, i, drops)
        return lotteries[key]

    def payoff_vector(lot: Lottery, q: Fraction) -> tuple[Fraction, ...]:
        key = (lot, q)
        if key not in payoffs:
            payoffs[key] = tuple(_payoff(lot, q, u) for u in utilities)
        return payoffs[key]

    checked = violations = 0
    first = None
    for bids in grid.profiles(n, distinct_only):
        for i in range(1, n + 1):
            q = bids[i - 1]
            others = bids[: i - 1] + bids[i:]
            truthful = lottery(i, others, q)
            honest = payoff_vector(truthful, q)
            for s in points:
                if s == q:
                    continue
                checked += 1
                lying = lottery(i, others, s)
                if not lying or lying == truthful:
                    continue
                for k, gain in enumerate(payoff_vector(lying, q)):
                    if gain > honest[k]:
                        violations += 1
                        if first is None:
                            first = Counterexample(bids, i, s, utilities[k], honest[k], gain, "profitable deviation")
                        break
    return PropertyReport(
        "weak-ic" if distinct_only else "ic",
        violations == 0,
        mech.value,
        checked,
        violations,
        first,
        {"n": n, "grid": f"1/{grid.k}", "utilities": len(utilities)},
    )


def check_monotonicity(mech: MechanismId, grid: BidGrid, n: int, drops: DropSchedule | None = None) -> PropertyReport:
    """Admission probability never rises when a user raises its own bid."""
    _need_drops(mech, drops)
    points = grid.points()
    checked = violations = 0
    first = None
    for others in itertools.product(points, repeat=n - 1):
        for i in range(1, n + 1):
            probs = [run(mech, profile_from_others(others, s, i), drops).admission_probability(i) for s in points]
            for lo in range(len(points) - 1):
                checked += 1
                if probs[lo + 1] > probs[lo]:
                    violations += 1
                    if first is None:
                        bids = profile_from_others(others, points[lo], i).bids
                        first = Counterexample(
                            bids,
                            i,
                            points[lo + 1],
                            reason=f"P(admit) rises from {format_probability(probs[lo])} to {format_probability(probs[lo + 1])}",
                        )
    return PropertyReport("monotonicity", violations == 0, mech.value, checked, violations, first, {"n": n, "grid": f"1/{grid.k}"})


def extract_win_interval(
    mech: MechanismId, others: Sequence[Fraction], grid: BidGrid, drops: DropSchedule | None = None
) -> tuple[Fraction, PropertyReport]:
    """Scan the user's own bid over the grid and recover its winning threshold.

    The scan must show a prefix of winning bids, all served at one rate, and
    that rate must equal ``highest_winning_bid(others)`` with every grid bid
    winning iff it is at most that rate. The observed rate is returned.
    """
    if not mech.deterministic:
        raise MechanismError(f"{mech.value} is randomised; win intervals need a deterministic mechanism")
    _need_drops(mech, drops)
    others = tuple(others)
    analytic = highest_winning_bid(others, drops)
    user = len(others) + 1
    scan = []
    for s in grid.points():
        outcome = run_astar(profile_from_others(others, s, user), drops)
        scan.append((s, outcome.rate(user)))
    rates = {r for _, r in scan if r is not None}
    threshold = next(iter(rates)) if len(rates) == 1 else None
    failure = None
    if threshold is None:
        failure = Counterexample(others, user, reason=f"{len(rates)} distinct winning rates")
    elif threshold != analytic:
        failure = Counterexample(others, user, reason=f"observed rate {format_rate(threshold)} != {format_rate(analytic)}")
    else:
        for s, r in scan:
            if (r is not None) != (s <= threshold):
                failure = Counterexample(others, user, s, reason="win set is not the interval [0, threshold]")
                break
    report = PropertyReport(
        "win-interval",
        failure is None,
        mech.value,
        len(scan),
        0 if failure is None else 1,
        failure,
        {"threshold": None if threshold is None else format_rate(threshold), "analytic": format_rate(analytic)},
    )
    return (analytic if threshold is None else threshold), report
