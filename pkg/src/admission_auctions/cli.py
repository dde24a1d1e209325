"""Command-line front end: ``run``, ``verify`` and ``experiment``.

Exit status is 0 on success, 1 when a checked property fails unexpectedly and
2 for usage or input errors. Errors print one line, ``error: <code>: <text>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from . import experiments as ex
from . import verifier as vf
from .core import (
    BidProfile,
    DropSchedule,
    InputError,
    Outcome,
    OutcomeDistribution,
    format_probability,
    format_rate,
    load_profile,
    parse_rate,
)
from .mechanisms import MechanismError, MechanismId, admittance, run, run_abar_sampled

DEFAULT_DROP = "0.1"
SUITES = ("feasibility", "ic", "weak-ic", "monotonicity", "scalability", "all-or-none", "anonymity", "win-interval")
EXPERIMENTS = ("divergence", "sweep", "tight-instance", "worst-case")


class UsageError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError("usage", message)


@dataclass
class RunConfig:
    mechanism: MechanismId | None
    bids: Path | None
    drops_for: Callable[[int], DropSchedule]
    seed: int
    fmt: str
    grid: vf.BidGrid | None
    samples: int | None


def _drop_source(args: argparse.Namespace) -> Callable[[int], DropSchedule]:
    if getattr(args, "drop_file", None):
        try:
            data = json.loads(Path(args.drop_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError("bad_drop_file", f"cannot read drop file {args.drop_file}: {exc}") from None
        values = data.get("d") if isinstance(data, dict) else data
        if not isinstance(values, list):
            raise InputError("bad_drop_file", "drop file needs a list or an object with field 'd'")
        fixed = DropSchedule(tuple(parse_rate(v) for v in values))

        def from_file(n: int) -> DropSchedule:
            if not fixed.covers(n):
                raise InputError("bad_drop_file", f"drop file has {len(fixed.d)} values, n = {n} needs {n - 1}")
            return fixed

        return from_file
    value = parse_rate(getattr(args, "drop", None) or DEFAULT_DROP)
    DropSchedule((value,))  # validate even when n = 1 makes the schedule empty
    return lambda n: DropSchedule.constant(value, n)


def _grid(text: str) -> vf.BidGrid:
    try:
        grid = vf.BidGrid.parse(text)
    except (ValueError, InputError) as exc:
        raise UsageError("bad_grid", str(exc)) from None
    if grid.k < 2:
        raise UsageError("bad_grid", "grid step must be 1/k with k >= 2")
    return grid


def _config(args: argparse.Namespace) -> RunConfig:
    mech = MechanismId.parse(args.mech) if getattr(args, "mech", None) else None
    grid_text = getattr(args, "grid", None)
    return RunConfig(
        mechanism=mech,
        bids=Path(args.bids) if getattr(args, "bids", None) else None,
        drops_for=_drop_source(args),
        seed=getattr(args, "seed", 0),
        fmt=getattr(args, "format", "json"),
        grid=_grid(grid_text) if grid_text else None,
        samples=getattr(args, "samples", None),
    )


def _emit(obj: Any, out) -> None:
    out.write(json.dumps(obj, indent=2) + "\n")


# -- run ---------------------------------------------------------------------


def _outcome_rows(dist: OutcomeDistribution) -> list[list[str]]:
    rows = []
    for k, (outcome, p) in enumerate(dist, start=1):
        for user, rate in outcome.rates or ((None, None),):
            rows.append([str(k), format_probability(p), "" if user is None else str(user), "" if rate is None else format_rate(rate)])
    return rows


def cmd_run(args: argparse.Namespace, out) -> int:
    cfg = _config(args)
    if cfg.mechanism is None or cfg.bids is None:
        raise UsageError("usage", "run needs --mech and --bids")
    profile = load_profile(cfg.bids)
    drops = cfg.drops_for(profile.n)
    dist = run(cfg.mechanism, profile, drops)
    if cfg.fmt == "csv":
        out.write("outcome,probability,user,rate\n")
        for row in _outcome_rows(dist):
            out.write(",".join(row) + "\n")
        return 0
    result: dict[str, Any] = {
        "mechanism": cfg.mechanism.value,
        "profile": [format_rate(b) for b in profile],
    }
    if cfg.mechanism is MechanismId.ASTAR:
        result["drops"] = [format_rate(d) for d in drops.d]
        outcome: Outcome = dist.entries[0][0]
        result["outcome"] = outcome.to_dict()
    else:
        result["distribution"] = dist.to_list()
    result["admittance"] = format_rate(admittance(dist))
    if cfg.mechanism is MechanismId.ABAR and args.seed is not None:
        result["sampled"] = run_abar_sampled(profile, args.seed).to_dict()
    _emit(result, out)
    return 0


# -- verify ------------------------------------------------------------------


def _profiles(args: argparse.Namespace, cfg: RunConfig) -> Iterable[BidProfile]:
    if cfg.bids is not None:
        return [load_profile(cfg.bids)]
    if args.random:
        if not args.n:
            raise UsageError("usage", "--random needs --n")
        return ex.uniform_profiles(args.n, args.random, cfg.seed)
    raise UsageError("usage", f"suite {args.suite} needs --bids or --random")


def _mechs(cfg: RunConfig) -> list[MechanismId]:
    return [cfg.mechanism] if cfg.mechanism else list(MechanismId)


def _need(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("usage", f"suite {args.suite} needs {' '.join(missing)}")


def _verify_reports(args: argparse.Namespace, cfg: RunConfig) -> list[vf.PropertyReport]:
    suite = args.suite
    grid = cfg.grid or vf.BidGrid(20)
    if suite in ("ic", "weak-ic"):
        _need(args, "mech", "n")
        kinds = tuple(k.strip() for k in args.utilities.split(","))
        utilities = vf.utility_family(grid, kinds)
        drops = cfg.drops_for(args.n)
        return [vf.brute_force_ic(cfg.mechanism, grid, args.n, utilities, drops, distinct_only=suite == "weak-ic")]
    if suite == "monotonicity":
        _need(args, "mech", "n")
        return [vf.check_monotonicity(cfg.mechanism, grid, args.n, cfg.drops_for(args.n))]
    if suite == "win-interval":
        mech = cfg.mechanism or MechanismId.ASTAR
        if args.others is not None:
            others_sets = [tuple(parse_rate(v) for v in args.others.split(",") if v.strip())]
        elif args.random and args.n:
            others_sets = [p.bids for p in ex.uniform_profiles(args.n - 1, args.random, cfg.seed)] if args.n > 1 else [()]
        else:
            raise UsageError("usage", "suite win-interval needs --others or --random with --n")
        reports = []
        for others in others_sets:
            _, report = vf.extract_win_interval(mech, others, grid, cfg.drops_for(len(others) + 1))
            reports.append(report)
        return reports if len(reports) == 1 else [vf.merge_reports("win-interval", reports)]
    profiles = list(_profiles(args, cfg))
    if suite == "feasibility":
        return [
            vf.merge_reports("feasibility", (vf.check_feasibility(m, p, cfg.drops_for(p.n)) for p in profiles))
            for m in _mechs(cfg)
        ]
    if suite == "scalability":
        return [vf.merge_reports("scalability", (vf.check_scalability(p) for p in profiles))]
    if suite == "all-or-none":
        return [vf.merge_reports("all-or-none", (vf.check_all_or_none(p, cfg.drops_for(p.n)) for p in profiles))]
    if suite == "anonymity":
        return [
            vf.merge_reports(
                "anonymity",
                (vf.check_permutation_equivariance(m, p, cfg.drops_for(p.n), seed=cfg.seed) for p in profiles),
            )
            for m in _mechs(cfg)
        ]
    raise UsageError("unknown_suite", f"unknown suite {suite!r}")


def cmd_verify(args: argparse.Namespace, out) -> int:
    if args.suite not in SUITES:
        raise UsageError("unknown_suite", f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    cfg = _config(args)
    reports = _verify_reports(args, cfg)
    expected = "fail" if args.expect_fail else "pass"
    ok = True
    for r in reports:
        line = {**r.to_dict(), "expected": expected}
        out.write(json.dumps(line) + "\n")
        ok &= r.passed != args.expect_fail
    return 0 if ok else 1


# -- experiment --------------------------------------------------------------


def _finish(table: str, summary: dict[str, Any], args: argparse.Namespace, out) -> None:
    """CSV goes to --csv when given; stdout carries CSV for --format csv, else the JSON summary."""
    if args.csv:
        Path(args.csv).write_text(table, encoding="utf-8")
    if args.format == "csv" and not args.csv:
        out.write(table)
    else:
        _emit(summary, out)


def cmd_experiment(args: argparse.Namespace, out) -> int:
    name = args.name
    if name not in EXPERIMENTS:
        raise UsageError("unknown_experiment", f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg = _config(args)
    if name == "divergence":
        _need(args, "n")
        est = ex.estimate_divergence(args.n, cfg.drops_for(args.n), args.samples or 100_000, cfg.seed)
        table = (
            "n,drop_max,samples,divergent_count,point_estimate,standard_error,analytic_bound\n"
            f"{est.n},{format_rate(est.drop_max)},{est.samples},{est.divergent_count},"
            f"{format_rate(est.point_estimate)},{est.standard_error!r},{format_rate(est.analytic_bound)}\n"
        )
        _finish(table, {**est.to_dict(), "seed": cfg.seed}, args, out)
        return 0 if est.within_bound() else 1
    if name == "sweep":
        _need(args, "n")
        rows = ex.admittance_sweep(args.n, args.samples or 1000, cfg.seed, cfg.drops_for(args.n))
        summary = {
            "experiment": "sweep",
            "n": args.n,
            "samples": len(rows),
            "seed": cfg.seed,
            "means": {k: format_rate(v) for k, v in ex.sweep_means(rows).items()},
            "std_errors": ex.sweep_std_errors(rows),
        }
        _finish(ex.sweep_csv(rows), summary, args, out)
        return 0
    if name == "tight-instance":
        _need(args, "m")
        profile = ex.tight_scalability_instance(args.m)
        report = {"experiment": "tight-instance", "m": args.m, **ex.instance_report(profile, cfg.drops_for(profile.n))}
        _emit(report, out)
        return 0
    _need(args, "n", "m")
    profile = ex.worst_case_astar_instance(args.n, args.m)
    _emit({"experiment": "worst-case", "n": args.n, "m": args.m, **ex.instance_report(profile, cfg.drops_for(profile.n))}, out)
    return 0


# -- wiring ------------------------------------------------------------------


def _add_drop_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--drop", "--d", dest="drop", help=f"constant d_j for every j (default {DEFAULT_DROP})")
    g.add_argument("--drop-file", help="JSON list of d_1..d_{n-1}, or an object with field 'd'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="admission-auctions", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one mechanism on a bid file")
    p.add_argument("--mech", required=True, choices=[m.value for m in MechanismId])
    p.add_argument("--bids", required=True)
    p.add_argument("--seed", type=int, default=None, help="also draw one outcome (abar)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_drop_args(p)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--mech", choices=[m.value for m in MechanismId])
    p.add_argument("--n", type=int)
    p.add_argument("--grid", default="1/20")
    p.add_argument("--bids")
    p.add_argument("--others", help="comma-separated reduced profile for win-interval")
    p.add_argument("--random", type=int, default=0, help="number of uniform random profiles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--utilities", default="step,capped_linear")
    p.add_argument("--expect-fail", action="store_true")
    _add_drop_args(p)

    p = sub.add_parser("experiment", help="run an experiment")
    p.add_argument("name")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--csv", help="write CSV data to this path")
    _add_drop_args(p)
    return parser


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "experiment": cmd_experiment}


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except (UsageError, InputError) as exc:
        err.write(f"error: {exc.code}: {exc}\n")
    except (MechanismError, ValueError) as exc:
        err.write(f"error: invalid_parameter: {exc}\n")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
