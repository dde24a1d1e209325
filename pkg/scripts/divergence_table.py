#!/usr/bin/env python3
"""Tabulate how often the dropped threshold changes the outcome, against d*n."""

import argparse
import csv
import sys

from admission_auctions.core import DropSchedule, format_rate
from admission_auctions.experiments import estimate_divergence


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--d", nargs="+", default=["0.01", "0.02", "0.05", "0.1"])
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "d", "estimate", "std_error", "bound", "within"])
    for n in args.n:
        for d in args.d:
            est = estimate_divergence(n, DropSchedule.constant(d, n), args.samples, args.seed)
            w.writerow([n, d, f"{float(est.point_estimate):.6f}", f"{est.standard_error:.6f}",
                        format_rate(est.analytic_bound), est.within_bound()])


if __name__ == "__main__":
    main()
