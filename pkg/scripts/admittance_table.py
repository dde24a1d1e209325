#!/usr/bin/env python3
"""Mean admittance of Abar, A*, F and T on uniform random profiles, by n."""

import argparse
import csv
import sys

from admission_auctions.core import DropSchedule
from admission_auctions.experiments import admittance_sweep, sweep_means, sweep_std_errors


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=list(range(1, 11)))
    ap.add_argument("--d", default="0.1")
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    cols = ("abar", "astar", "f", "t")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", *cols, *(f"se_{c}" for c in cols)])
    for n in args.n:
        rows = admittance_sweep(n, args.samples, args.seed, DropSchedule.constant(args.d, n))
        means, ses = sweep_means(rows), sweep_std_errors(rows)
        w.writerow([n, *(f"{float(means[c]):.4f}" for c in cols), *(f"{ses[c]:.4f}" for c in cols)])


if __name__ == "__main__":
    main()
