#!/usr/bin/env python3
"""Sweep stream sizes and report per-stage throughput as a CSV table."""

import argparse
import csv
import sys

from eventdrop.pipeline import benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[10_000, 100_000, 1_000_000, 5_000_000])
    ap.add_argument("--bins", type=int, default=9)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    writer = csv.writer(sys.stdout)
    writer.writerow(["n_events", "stage", "name",
                     "events_per_s_single", "events_per_s_multi"])
    for n in args.sizes:
        report = benchmark(n_events=n, time_bins=args.bins, workers=args.workers)
        for row in report["rows"]:
            writer.writerow([n, row["stage"], row["name"],
                             f"{row['events_per_s_single']:.4g}",
                             f"{row['events_per_s_multi']:.4g}"])


if __name__ == "__main__":
    main()
