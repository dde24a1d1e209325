"""Exact-arithmetic value types shared by the mechanisms and the checks.

Rates are ``fractions.Fraction`` values normalised to a unit capacity. User
indices are 1-based throughout, matching how admission results are reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, Union

Rate = Fraction
RateLike = Union[Fraction, int, str]

ZERO = Fraction(0)
ONE = Fraction(1)


class InputError(ValueError):
    """Invalid user-supplied data. ``code`` is a short machine-readable reason."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def parse_rate(value: RateLike) -> Fraction:
    """Parse an exact rational from an int, Fraction, or "0.4" / "2/5" string."""
    if isinstance(value, bool):
        raise InputError("bad_number", f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError("bad_number", f"not an exact number: {value!r}") from None
    # floats are refused: 0.1 has no exact binary value
    raise InputError("bad_number", f"expected a decimal string or integer, got {value!r}")


def _power_of(den: int, p: int) -> int:
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    return k


def format_rate(q: Fraction) -> str:
    """Decimal string when exact in base 10, otherwise "num/den"."""
    den = q.denominator
    if den == 1:
        return str(q.numerator)
    twos, fives = _power_of(den, 2), _power_of(den, 5)
    if 2**twos * 5**fives != den:
        return f"{q.numerator}/{den}"
    places = max(twos, fives)
    scaled = abs(q.numerator) * 10**places // den
    whole, frac = divmod(scaled, 10**places)
    sign = "-" if q < 0 else ""
    return f"{sign}{whole}.{frac:0{places}d}".rstrip("0")


def format_probability(p: Fraction) -> str:
    """Probabilities always print as "num/den" (or "1"/"0")."""
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def _check_unit(value: Fraction, what: str) -> None:
    if not ZERO <= value <= ONE:
        raise InputError("out_of_range", f"{what} = {format_rate(value)} is outside [0, 1]")


@dataclass(frozen=True)
class BidProfile:
    """Normalised bids of users 1..n."""

    bids: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        bids = tuple(parse_rate(b) for b in self.bids)
        object.__setattr__(self, "bids", bids)
        if not bids:
            raise InputError("empty_profile", "a bid profile needs at least one user")
        for i, b in enumerate(bids, start=1):
            _check_unit(b, f"bid of user {i}")

    @classmethod
    def of(cls, *bids: RateLike) -> BidProfile:
        return cls(tuple(parse_rate(b) for b in bids))

    @property
    def n(self) -> int:
        return len(self.bids)

    def __len__(self) -> int:
        return len(self.bids)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.bids)

    def bid(self, user: int) -> Fraction:
        return self.bids[user - 1]

    def users(self) -> range:
        return range(1, self.n + 1)

    def others(self, user: int) -> tuple[Fraction, ...]:
        """The reduced profile with ``user`` removed (possibly empty)."""
        return self.bids[: user - 1] + self.bids[user:]

    def with_bid(self, user: int, bid: RateLike) -> BidProfile:
        bids = list(self.bids)
        bids[user - 1] = parse_rate(bid)
        return BidProfile(tuple(bids))

    def permuted(self, perm: Sequence[int]) -> BidProfile:
        """Move user ``i`` to slot ``perm[i-1]`` (both 1-based)."""
        bids: list[Fraction] = [ZERO] * self.n
        for i, target in enumerate(perm, start=1):
            bids[target - 1] = self.bids[i - 1]
        return BidProfile(tuple(bids))

    def is_distinct(self) -> bool:
        return len(set(self.bids)) == self.n


def profile_from_others(others: Sequence[Fraction], bid: Fraction, user: int | None = None) -> BidProfile:
    """Insert ``bid`` at 1-based position ``user`` (default: last) among ``others``."""
    pos = len(others) + 1 if user is None else user
    others = tuple(others)
    return BidProfile(others[: pos - 1] + (bid,) + others[pos - 1 :])


def normalize_profile(raw_bids: Iterable[RateLike], capacity: RateLike) -> BidProfile:
    """Divide raw resource requests by the access point's capacity."""
    cap = parse_rate(capacity)
    if cap <= 0:
        raise InputError("bad_capacity", f"capacity must be positive, got {format_rate(cap)}")
    bids = []
    for i, raw in enumerate(raw_bids, start=1):
        q = parse_rate(raw)
        if q < 0:
            raise InputError("negative_bid", f"bid of user {i} is negative: {format_rate(q)}")
        if q > cap:
            raise InputError(
                "bid_exceeds_capacity",
                f"bid of user {i} ({format_rate(q)}) exceeds capacity {format_rate(cap)}",
            )
        bids.append(q / cap)
    return BidProfile(tuple(bids))


@dataclass(frozen=True)
class SortedProfile:
    """Sorted bids with the pseudo-bidder 1 appended.

    ``sigma[j-1]`` holds the 1-based sigma_j; ``sigma_at(0)`` is 0 by convention.
    """

    source_len: int
    sigma: tuple[Fraction, ...]

    def sigma_at(self, j: int) -> Fraction:
        if not 0 <= j <= self.source_len + 1:
            raise IndexError(f"sigma index {j} outside 0..{self.source_len + 1}")
        return ZERO if j == 0 else self.sigma[j - 1]


def sort_with_pseudo(bids: BidProfile | Sequence[Fraction]) -> SortedProfile:
    values = tuple(bids)
    return SortedProfile(len(values), tuple(sorted(values)) + (ONE,))


def sigma_at(sorted_profile: SortedProfile, j: int) -> Fraction:
    return sorted_profile.sigma_at(j)


@dataclass(frozen=True)
class Outcome:
    """One admission decision: the winning users and the rate each receives."""

    rates: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rates", tuple(sorted(self.rates)))

    @classmethod
    def single_price(cls, winners: Iterable[int], rate: Fraction) -> Outcome:
        return cls(tuple((i, rate) for i in winners))

    @classmethod
    def from_mapping(cls, rate_of: Mapping[int, Fraction]) -> Outcome:
        return cls(tuple(rate_of.items()))

    @property
    def winners(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.rates)

    @property
    def rate_of(self) -> dict[int, Fraction]:
        return dict(self.rates)

    def rate(self, user: int) -> Fraction | None:
        for i, r in self.rates:
            if i == user:
                return r
        return None

    def __len__(self) -> int:
        return len(self.rates)

    def total_rate(self) -> Fraction:
        return sum((r for _, r in self.rates), ZERO)

    def relabel(self, perm: Sequence[int]) -> Outcome:
        return Outcome(tuple((perm[i - 1], r) for i, r in self.rates))

    def to_dict(self) -> dict[str, Any]:
        return {
            "winners": [i for i, _ in self.rates],
            "rates": {str(i): format_rate(r) for i, r in self.rates},
        }


@dataclass(frozen=True)
class OutcomeDistribution:
    """Finite lottery over outcomes with exact probabilities summing to 1."""

    entries: tuple[tuple[Outcome, Fraction], ...]

    def __post_init__(self) -> None:
        entries = tuple(sorted(self.entries, key=lambda e: e[0].rates))
        object.__setattr__(self, "entries", entries)
        if any(p <= 0 for _, p in entries):
            raise ValueError("outcome probabilities must be positive")
        if sum((p for _, p in entries), ZERO) != ONE:
            raise ValueError("outcome probabilities must sum to 1")
        if len({o for o, _ in entries}) != len(entries):
            raise ValueError("outcomes must be pairwise distinct")

    @classmethod
    def certain(cls, outcome: Outcome) -> OutcomeDistribution:
        return cls(((outcome, ONE),))

    @classmethod
    def uniform(cls, outcomes: Sequence[Outcome]) -> OutcomeDistribution:
        p = Fraction(1, len(outcomes))
        return cls(tuple((o, p) for o in outcomes))

    def __iter__(self) -> Iterator[tuple[Outcome, Fraction]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_deterministic(self) -> bool:
        return len(self.entries) == 1

    def admission_probability(self, user: int) -> Fraction:
        return sum((p for o, p in self.entries if user in o.winners), ZERO)

    def lottery(self, user: int) -> tuple[tuple[Fraction, Fraction], ...]:
        """(rate, probability) pairs over the outcomes that admit ``user``."""
        out = []
        for o, p in self.entries:
            r = o.rate(user)
            if r is not None:
                out.append((r, p))
        return tuple(out)

    def relabel(self, perm: Sequence[int]) -> OutcomeDistribution:
        return OutcomeDistribution(tuple((o.relabel(perm), p) for o, p in self.entries))

    def to_list(self) -> list[dict[str, Any]]:
        return [{**o.to_dict(), "probability": format_probability(p)} for o, p in self.entries]


@dataclass(frozen=True)
class DropSchedule:
    """Drop parameters d_1, d_2, ... for the truthful refinement, each in (0, 1)."""

    d: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        d = tuple(parse_rate(v) for v in self.d)
        object.__setattr__(self, "d", d)
        for j, v in enumerate(d, start=1):
            if not ZERO < v < ONE:
                raise InputError("bad_drop", f"d_{j} = {format_rate(v)} must lie strictly in (0, 1)")

    @classmethod
    def constant(cls, value: RateLike, n: int) -> DropSchedule:
        """d_j = value for j = 1..n-1."""
        return cls((parse_rate(value),) * max(n - 1, 0))

    def at(self, j: int) -> Fraction:
        if not 1 <= j <= len(self.d):
            raise IndexError(f"drop schedule has no d_{j} (length {len(self.d)})")
        return self.d[j - 1]

    def covers(self, n: int) -> bool:
        return len(self.d) >= n - 1

    @property
    def max(self) -> Fraction:
        return max(self.d, default=ZERO)


@dataclass(frozen=True)
class UtilitySpec:
    """Utility of being served at rate ``x`` for a user needing rate ``q``.

    ``step``: scale if x >= q else 0.
    ``capped_linear``: 0 below q, otherwise scale * min(1, x / knee).
    """

    kind: str
    scale: Fraction = ONE
    knee: Fraction | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("step", "capped_linear"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("utility scale must be positive")
        if self.kind == "capped_linear" and (self.knee is None or not ZERO < self.knee <= ONE):
            raise ValueError("capped_linear utility needs a knee in (0, 1]")

    @classmethod
    def step(cls, scale: RateLike = 1) -> UtilitySpec:
        return cls("step", parse_rate(scale))

    @classmethod
    def capped_linear(cls, knee: RateLike, scale: RateLike = 1) -> UtilitySpec:
        return cls("capped_linear", parse_rate(scale), parse_rate(knee))

    def __call__(self, q: Fraction, x: Fraction) -> Fraction:
        if x < q:
            return ZERO
        if self.kind == "step" or x >= self.knee:
            return self.scale
        return self.scale * x / self.knee

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "scale": format_rate(self.scale)}
        if self.knee is not None:
            d["knee"] = format_rate(self.knee)
        return d


def profile_from_json(data: Mapping[str, Any]) -> BidProfile:
    if not isinstance(data, Mapping):
        raise InputError("bad_schema", "bid file must hold a JSON object")
    if "bids" not in data:
        raise InputError("missing_field", "bid file is missing field 'bids'")
    bids = data["bids"]
    if not isinstance(bids, list):
        raise InputError("bad_field", "field 'bids' must be a list")
    try:
        raw = [parse_rate(b) for b in bids]
    except InputError as exc:
        raise InputError("bad_field", f"field 'bids': {exc}") from None
    try:
        capacity = parse_rate(data.get("capacity", "1"))
    except InputError as exc:
        raise InputError("bad_field", f"field 'capacity': {exc}") from None
    return normalize_profile(raw, capacity)


def load_profile(path: str | Path) -> BidProfile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError("unreadable_file", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("bad_json", f"{path}: {exc.msg} at line {exc.lineno}") from None
    return profile_from_json(data)


def profile_to_json(profile: BidProfile, capacity: RateLike = 1) -> dict[str, Any]:
    cap = parse_rate(capacity)
    return {"capacity": format_rate(cap), "bids": [format_rate(b * cap) for b in profile]}
