#!/usr/bin/env python3
"""Measure pipeline optimality gaps against the exact oracle on small
seeded instances, alongside the nearest-neighbour + 2-opt baseline."""

import argparse
import statistics

from tspheat.bench import held_karp_exact, nn_two_opt_baseline, solve_pipeline
from tspheat.generator import TrainConfig
from tspheat.instances import generate_random
from tspheat.search import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="tsp20")
    ap.add_argument("--rounds", type=int, default=12)
    ap.add_argument("--time-budget", type=float, default=None)
    args = ap.parse_args()

    params = PRESETS[args.preset].with_budget(
        time_budget=args.time_budget, max_rounds=args.rounds
    )
    gaps, base_gaps, optimal = [], [], 0
    for k in range(args.count):
        seed = args.seed + k
        inst = generate_random(args.n, seed)
        _, ref = held_karp_exact(inst)
        result, _ = solve_pipeline(inst, TrainConfig(seed=seed), params, seed, ref_length=ref)
        _, base_len = nn_two_opt_baseline(inst, seed)
        gaps.append(result.gap_percent)
        base_gaps.append(100.0 * (base_len - ref) / ref)
        optimal += abs(result.length - ref) <= 1e-9
    print(f"instances: {args.count}  n={args.n}  preset={args.preset}")
    print(f"pipeline:  mean gap {statistics.mean(gaps):.4f}%  optimal {optimal}/{args.count}")
    print(f"baseline:  mean gap {statistics.mean(base_gaps):.4f}%")


if __name__ == "__main__":
    main()
