#!/usr/bin/env python3
"""Sweep the candidate-list size M and report optimal-edge coverage.

For each M, fits heat maps on seeded small instances, prunes to the
prediction edge set, and compares against exact optimal tours. Writes one
CSV per M plus an aggregate summary to stdout.
"""

import argparse
import statistics

from tspheat.bench import coverage_csv, coverage_report
from tspheat.generator import TrainConfig
from tspheat.instances import generate_random


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--m-values", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--out-prefix", default=None, help="write per-M CSVs here")
    args = ap.parse_args()

    instances = [
        (generate_random(args.n, args.seed + k), args.seed + k)
        for k in range(args.count)
    ]
    cfg = TrainConfig(steps=args.steps)
    print("M,mean_eta,min_eta,fully_covered,mean_pi_size")
    for m in args.m_values:
        rows = coverage_report(instances, cfg, m)
        etas = [r.eta for r in rows]
        covered = sum(r.fully_covered for r in rows)
        pi_sizes = [r.pi_size for r in rows]
        print(
            f"{m},{statistics.mean(etas):.4f},{min(etas):.4f},"
            f"{covered}/{len(rows)},{statistics.mean(pi_sizes):.1f}"
        )
        if args.out_prefix:
            path = f"{args.out_prefix}_m{m}.csv"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(coverage_csv(rows))


if __name__ == "__main__":
    main()
