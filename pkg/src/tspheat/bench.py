"""Exact small-instance oracle, baselines, pipeline orchestration and
report/figure emission."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .candidates import edge_set, overlap_coefficient, top_m_filter
from .generator import TrainConfig, optimize_heatmap
from .instances import Instance, Tour, distance_matrix, tour_length
from .search import SearchParams, _two_opt_order, run_search

HELD_KARP_MAX_N = 18


@dataclass(frozen=True)
class BenchResult:
    """One (instance, method) measurement row.

    Wall-clock seconds are split into the heat-map phase and the search
    phase; methods without a heat-map phase report 0 for it. gap_percent is
    relative to a reference length when one is available.
    """

    instance: str
    method: str
    length: float
    gap_percent: Optional[float]
    heatmap_seconds: float
    search_seconds: float
    seed: int


def gap_percent(length: float, ref_length: float) -> float:
    """Percentage excess over a reference length."""
    return 100.0 * (length - ref_length) / ref_length


def held_karp_exact(inst: Instance):
    """Provably optimal tour by dynamic programming over city subsets.

    Memory and time grow as 2^n, so instances above HELD_KARP_MAX_N cities
    are refused. Returns (Tour, length).
    """
    n = inst.n
    if n > HELD_KARP_MAX_N:
        raise ValueError(
            f"held_karp_exact handles at most n={HELD_KARP_MAX_N} cities, got {n}; "
            "use the heuristic pipeline for larger instances"
        )
    d = distance_matrix(inst)
    full = 1 << n
    dp = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int32)
    dp[1, 0] = 0.0  # fix city 0 as the start; tours are cycles so WLOG
    masks = np.arange(full, dtype=np.int64)
    popcount = np.zeros(full, dtype=np.int64)
    for b in range(n):
        popcount += (masks >> b) & 1
    by_pop = np.argsort(popcount, kind="stable")
    bounds = np.searchsorted(popcount[by_pop], np.arange(n + 2))
    for p in range(1, n):
        layer = by_pop[bounds[p]:bounds[p + 1]]
        layer = layer[(layer & 1) == 1]
        if layer.size == 0:
            continue
        dp_layer = dp[layer]
        for j in range(1, n):
            missing_j = (layer >> j) & 1 == 0
            src = layer[missing_j]
            if src.size == 0:
                continue
            scores = dp_layer[missing_j] + d[:, j][None, :]
            parent[src | (1 << j), j] = np.argmin(scores, axis=1)
            dp[src | (1 << j), j] = np.min(scores, axis=1)
    closing = dp[full - 1] + d[:, 0]
    last = int(np.argmin(closing))
    length = float(closing[last])
    order = np.empty(n, dtype=np.int64)
    mask = full - 1
    city = last
    for k in range(n - 1, -1, -1):
        order[k] = city
        prev = int(parent[mask, city])
        mask ^= 1 << city
        city = prev
    tour = Tour.from_order(order)
    return tour, length


def tour_edges(tour: Tour) -> set[tuple[int, int]]:
    """Undirected edge set of a tour (canonical (i, j) with i < j)."""
    order = tour.order
    n = order.shape[0]
    return {
        (int(min(order[k], order[(k + 1) % n])), int(max(order[k], order[(k + 1) % n])))
        for k in range(n)
    }


def nn_two_opt_baseline(inst: Instance, seed: int):
    """Nearest-neighbour construction from a random start city, then 2-opt.

    Returns (Tour, length); deterministic per seed.
    """
    n = inst.n
    d = distance_matrix(inst)
    rng = np.random.default_rng(seed)
    start = int(rng.integers(n))
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    order[0] = start
    visited[start] = True
    cur = start
    for k in range(1, n):
        row = np.where(visited, np.inf, d[cur])
        cur = int(np.argmin(row))
        order[k] = cur
        visited[cur] = True
    _two_opt_order(d, order)
    tour = Tour.from_order(order)
    return tour, tour_length(d, tour)


def solve_pipeline(
    inst: Instance,
    train_cfg: TrainConfig,
    search_params: SearchParams,
    seed: int,
    ref_length: Optional[float] = None,
):
    """Full pipeline: fit heat map, prune, search. Returns (BenchResult, Tour).

    The same seed drives both the logit initialization and the search run.
    """
    t0 = time.perf_counter()
    heat, _, _ = optimize_heatmap(inst, train_cfg)
    t_heat = time.perf_counter() - t0
    _, pruned = top_m_filter(heat, min(search_params.m, inst.n - 1))
    t1 = time.perf_counter()
    tour, stats = run_search(inst, pruned, search_params, seed)
    t_search = time.perf_counter() - t1
    gap = gap_percent(stats.best_length, ref_length) if ref_length is not None else None
    result = BenchResult(
        instance=inst.name or f"n{inst.n}",
        method="pipeline",
        length=stats.best_length,
        gap_percent=gap,
        heatmap_seconds=t_heat,
        search_seconds=t_search,
        seed=seed,
    )
    return result, tour


@dataclass(frozen=True)
class CoverageRow:
    instance: str
    seed: int
    m: int
    eta: float
    pi_size: int
    fully_covered: bool


def coverage_report(
    instances: list[tuple[Instance, int]],
    train_cfg: TrainConfig,
    m: int,
) -> list[CoverageRow]:
    """Edge-coverage analytics for oracle-solvable instances.

    For each (instance, seed): fit a heat map, prune to the top-m prediction
    edge set, and measure what fraction of the exact optimal tour's edges it
    covers.
    """
    rows = []
    for inst, seed in instances:
        heat, _, _ = optimize_heatmap(inst, replace(train_cfg, seed=seed))
        _, pruned = top_m_filter(heat, m)
        pred = edge_set(pruned)
        opt_tour, _ = held_karp_exact(inst)
        truth = tour_edges(opt_tour)
        eta = overlap_coefficient(pred, truth)
        rows.append(
            CoverageRow(
                instance=inst.name or f"n{inst.n}",
                seed=seed,
                m=m,
                eta=eta,
                pi_size=len(pred),
                fully_covered=truth <= pred,
            )
        )
    return rows


def coverage_csv(rows: list[CoverageRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "seed", "M", "eta", "pi_size", "fully_covered"])
    for r in rows:
        writer.writerow(
            [r.instance, r.seed, r.m, repr(r.eta), r.pi_size, str(r.fully_covered).lower()]
        )
    return buf.getvalue()


def emit_tour_svg(inst: Instance, tour: Tour, path: str) -> None:
    """Write a standalone SVG of the instance and tour.

    One circle per city and one line per tour edge; byte-deterministic for
    identical inputs.
    """
    coords = inst.coords
    n = inst.n
    xmin, ymin = coords.min(axis=0)
    xmax, ymax = coords.max(axis=0)
    span = max(xmax - xmin, ymax - ymin, 1e-9)
    size = 640.0
    pad = 20.0
    scale = (size - 2 * pad) / span

    def sx(x):
        return pad + (float(x) - xmin) * scale

    def sy(y):
        # flip so larger y plots upward
        return size - pad - (float(y) - ymin) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" '
        f'height="{size:.0f}" viewBox="0 0 {size:.0f} {size:.0f}">',
    ]
    order = tour.order
    for k in range(n):
        a = order[k]
        b = order[(k + 1) % n]
        lines.append(
            f'<line x1="{sx(coords[a, 0]):.3f}" y1="{sy(coords[a, 1]):.3f}" '
            f'x2="{sx(coords[b, 0]):.3f}" y2="{sy(coords[b, 1]):.3f}" '
            'stroke="#336699" stroke-width="1.5"/>'
        )
    for i in range(n):
        lines.append(
            f'<circle cx="{sx(coords[i, 0]):.3f}" cy="{sy(coords[i, 1]):.3f}" '
            'r="3" fill="#cc3333"/>'
        )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def bench_results_csv(rows: list[BenchResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["instance", "method", "length", "gap_percent", "heatmap_seconds",
         "search_seconds", "seed"]
    )
    for r in rows:
        writer.writerow(
            [r.instance, r.method, repr(r.length),
             "" if r.gap_percent is None else repr(r.gap_percent),
             f"{r.heatmap_seconds:.6f}", f"{r.search_seconds:.6f}", r.seed]
        )
    return buf.getvalue()
