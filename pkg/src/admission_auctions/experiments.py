"""Monte Carlo and constructed-instance experiments.

Random bids are uniform on [0, 1) and drawn as exact rationals k / 2**64, so
the density bound is K = 1 and every comparison stays exact. Sample ``k`` of a
run is row ``k`` of one seeded draw, which keeps results independent of how
the work is later split.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .core import BidProfile, DropSchedule, InputError, format_rate
from .mechanisms import (
    threshold_from_sigma,
    m1_m2_sorted,
    admittance,
    reduced_sigmas,
    run_abar_distribution,
    run_astar,
    run_f,
    run_t,
)

DENOMINATOR = 2**64
DENSITY_BOUND = 1


def uniform_profiles(n: int, samples: int, seed: int) -> Iterator[BidProfile]:
    """``samples`` i.i.d. profiles of ``n`` bids, uniform on the 2**-64 lattice in [0, 1)."""
    if n < 1 or samples < 0:
        raise InputError("bad_parameter", f"need n >= 1 and samples >= 0, got n={n}, samples={samples}")
    draws = np.random.default_rng(seed).integers(0, DENOMINATOR, size=(samples, n), dtype=np.uint64)
    for row in draws:
        yield BidProfile(tuple(Fraction(int(v), DENOMINATOR) for v in row))


@dataclass(frozen=True)
class DivergenceEstimate:
    n: int
    drop_max: Fraction
    samples: int
    divergent_count: int

    @property
    def point_estimate(self) -> Fraction:
        return Fraction(self.divergent_count, self.samples)

    @property
    def standard_error(self) -> float:
        p = self.divergent_count / self.samples
        return math.sqrt(p * (1 - p) / self.samples)

    @property
    def analytic_bound(self) -> Fraction:
        return self.drop_max * self.n * DENSITY_BOUND

    def within_bound(self, sigmas: float = 3.0) -> bool:
        return float(self.point_estimate) <= float(self.analytic_bound) + sigmas * self.standard_error

    def to_dict(self) -> dict:
        return {
            "experiment": "divergence",
            "n": self.n,
            "drop_max": format_rate(self.drop_max),
            "samples": self.samples,
            "divergent_count": self.divergent_count,
            "point_estimate": float(self.point_estimate),
            "standard_error": self.standard_error,
            "analytic_bound": format_rate(self.analytic_bound),
            "passed": self.within_bound(),
        }


def diverges(profile: BidProfile, drops: DropSchedule) -> bool:
    """Some user bids strictly between its dropped threshold and its supremum winning bid."""
    for t, s in reduced_sigmas(profile).items():
        m1, _ = m1_m2_sorted(s)
        # s[m1] is the supremum winning bid; skip the threshold unless t lies below it
        if t < s[m1] and threshold_from_sigma(s, drops) < t:
            return True
    return False


def estimate_divergence(n: int, drops: DropSchedule, samples: int, seed: int) -> DivergenceEstimate:
    if samples < 1:
        raise InputError("bad_parameter", "samples must be >= 1")
    if not drops.covers(n):
        raise InputError("bad_drop", f"drop schedule of length {len(drops.d)} does not cover n = {n}")
    count = sum(diverges(p, drops) for p in uniform_profiles(n, samples, seed))
    return DivergenceEstimate(n, drops.max, samples, count)


def tight_scalability_instance(m: int) -> BidProfile:
    """m + 1 zero bids and m bids of 1/m: |Abar| = m while |T| = 2m + 1."""
    if m < 1:
        raise InputError("bad_parameter", f"m must be >= 1, got {m}")
    return BidProfile((Fraction(0),) * (m + 1) + (Fraction(1, m),) * m)


def worst_case_astar_instance(n: int, m: int) -> BidProfile:
    """n equal bids of 1/m: the truthful mechanism admits nobody while F admits m."""
    if not 1 <= m < n:
        raise InputError("bad_parameter", f"need 1 <= m < n, got n={n}, m={m}")
    return BidProfile((Fraction(1, m),) * n)


@dataclass(frozen=True)
class SweepRow:
    sample: int
    abar: Fraction
    astar: Fraction
    f: Fraction
    t: Fraction


def admittances(profile: BidProfile, drops: DropSchedule) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Exact admittance of (Abar, A*, F, T) on one profile."""
    return (
        admittance(run_abar_distribution(profile)),
        Fraction(len(run_astar(profile, drops))),
        admittance(run_f(profile)),
        admittance(run_t(profile)),
    )


def admittance_sweep(n: int, samples: int, seed: int, drops: DropSchedule) -> list[SweepRow]:
    return [SweepRow(k, *admittances(p, drops)) for k, p in enumerate(uniform_profiles(n, samples, seed))]


def sweep_means(rows: Sequence[SweepRow]) -> dict[str, Fraction]:
    if not rows:
        return {}
    return {col: sum((getattr(r, col) for r in rows), Fraction(0)) / len(rows) for col in ("abar", "astar", "f", "t")}


def sweep_std_errors(rows: Sequence[SweepRow]) -> dict[str, float]:
    out = {}
    for col in ("abar", "astar", "f", "t"):
        values = [float(getattr(r, col)) for r in rows]
        out[col] = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return out


SWEEP_HEADER = ("sample", "abar", "astar", "f", "t")


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r.sample, *(format_rate(v) for v in (r.abar, r.astar, r.f, r.t))])
    means = sweep_means(rows)
    if means:
        w.writerow(["mean", *(format_rate(means[c]) for c in SWEEP_HEADER[1:])])
    return buf.getvalue()


def instance_report(profile: BidProfile, drops: DropSchedule) -> dict[str, object]:
    a, s, f, t = admittances(profile, drops)
    return {
        "profile": [format_rate(b) for b in profile],
        "abar": format_rate(a),
        "astar": format_rate(s),
        "f": format_rate(f),
        "t": format_rate(t),
    }
