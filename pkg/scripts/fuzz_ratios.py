"""Fuzz many instances and summarise the observed C1/C2 ratios per exponent.

    python scripts/fuzz_ratios.py --count 500 --depth 6 --jobs 4 --csv ratios.csv
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from twoweight.norm import constant_k
from twoweight.report import VerifyOptions, csv_rows, run_fuzz, write_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    ap.add_argument("--restarts", type=int, default=8)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--csv", type=Path)
    args = ap.parse_args(argv)

    rep = run_fuzz(args.count, args.depth, args.seed, args.p, VerifyOptions(restarts=args.restarts), jobs=args.jobs)
    rows = csv_rows(rep)
    print(f"{'p':>5} {'n':>5} {'median':>8} {'p95':>8} {'max':>8} {'K(p)':>8}")
    for p in args.p:
        r = np.array([row["ratio"] for row in rows if row["p"] == p and row["ratio"] is not None])
        if r.size:
            print(f"{p:5g} {r.size:5d} {np.median(r):8.4f} {np.quantile(r, 0.95):8.4f} {r.max():8.4f} {constant_k(p):8.3f}")
    print(f"failures: {rep['failures']}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_csv(rep, fh)
    return 0 if rep["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
