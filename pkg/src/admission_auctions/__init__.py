"""Truthful non-monetary admission-control auctions for a capacity-limited access point."""

from .core import (
    BidProfile,
    DropSchedule,
    InputError,
    Outcome,
    OutcomeDistribution,
    SortedProfile,
    UtilitySpec,
    format_rate,
    load_profile,
    normalize_profile,
    parse_rate,
    sigma_at,
    sort_with_pseudo,
)
from .mechanisms import (
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

__all__ = [
    "BidProfile",
    "DropSchedule",
    "InputError",
    "MechanismId",
    "Outcome",
    "OutcomeDistribution",
    "SortedProfile",
    "UtilitySpec",
    "admittance",
    "format_rate",
    "highest_winning_bid",
    "load_profile",
    "m1_m2",
    "m_bar",
    "normalize_profile",
    "parse_rate",
    "run",
    "run_abar_distribution",
    "run_abar_sampled",
    "run_astar",
    "run_f",
    "run_t",
    "sigma_at",
    "sort_with_pseudo",
    "supremum_winning_bid",
]
