"""Heat-map-guided best-first k-opt local search.

A search run repeats rounds of: random tour, 2-opt to a fixpoint, then
best-first node expansion where each expansion tries a bounded number of
sequential k-opt constructions and moves to the shortest improving result.
Constructions grow a Hamiltonian path with one fixed endpoint; the next city
is sampled from the moving endpoint's candidate list with probability
proportional to its pruned-heat value plus an optional visit-count
exploration bonus. Edges of applied improving actions get their heat raised,
and the raised heat persists across rounds.

Everything here is single-threaded per run: a run owns its mutable copy of
the pruned heat map and its statistics. Parallelism belongs across runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .candidates import DISTANCE_MODE, HEAT_MODE, CandidateLists, candidate_lists
from .instances import Instance, Tour, distance_matrix, order_length

TOUR_HEADER = "UTSP-TOUR v1"

# smallest accepted closure gain; guards against float-noise "improvements"
MIN_GAIN = 1e-10
# sampling-weight floor so zero-heat candidates stay reachable
WEIGHT_FLOOR = 1e-12
# threshold for an improving 2-opt move
TWO_OPT_EPS = 1e-10


@dataclass(frozen=True)
class SearchParams:
    """Knobs for one search run.

    k_range is the half-open integer interval the per-round cap on removed
    edges is drawn from; a fixed cap K is expressed as (K, K + 1).
    expand_budget is the number of construction attempts per node expansion.
    At least one of time_budget (seconds) / max_rounds must be set; rounds
    give bit-reproducible runs, wall-clock budgets do not.
    """

    alpha: float = 0.0
    beta: float = 10.0
    m: int = 8
    k_range: tuple[int, int] = (10, 11)
    expand_budget: int = 60
    time_budget: Optional[float] = None
    max_rounds: Optional[int] = None

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.m < 1:
            raise ValueError("candidate list size m must be >= 1")
        k_lo, k_hi = self.k_range
        if k_lo < 2:
            raise ValueError(f"k_range lower bound must be >= 2, got {k_lo}")
        if k_hi <= k_lo:
            raise ValueError(f"k_range must be a nonempty interval, got {self.k_range}")
        if self.expand_budget < 1:
            raise ValueError("expand_budget must be >= 1")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be > 0 when set")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1 when set")

    def with_budget(self, time_budget=None, max_rounds=None) -> "SearchParams":
        return replace(self, time_budget=time_budget, max_rounds=max_rounds)


# Named parameter sets by instance-size tier (candidate-list size, heat
# update scale, removed-edge cap interval and per-node attempt budget).
PRESETS: dict[str, SearchParams] = {
    "tsp20": SearchParams(alpha=0.0, beta=10.0, m=8, k_range=(10, 11), expand_budget=60),
    "tsp50": SearchParams(alpha=0.0, beta=10.0, m=8, k_range=(5, 15), expand_budget=150),
    "tsp100": SearchParams(alpha=0.0, beta=10.0, m=8, k_range=(5, 35), expand_budget=300),
    "tsp200": SearchParams(alpha=0.0, beta=10.0, m=8, k_range=(10, 90), expand_budget=600),
    "tsp500": SearchParams(alpha=0.0, beta=50.0, m=5, k_range=(30, 130), expand_budget=1000),
    "tsp1000": SearchParams(alpha=0.0, beta=50.0, m=5, k_range=(10, 110), expand_budget=2000),
}


@dataclass
class SearchStats:
    """Counters accumulated over a run.

    edge_use_counts maps canonical (i, j) pairs, i < j, to how many times the
    edge was stochastically selected; total_expansions counts every
    construction attempt, completed or discarded.
    """

    edge_use_counts: dict = field(default_factory=dict)
    total_expansions: int = 0
    rounds: int = 0
    best_length: float = math.inf
    best_tour: Optional[Tour] = None
    round_best_lengths: list = field(default_factory=list)


@dataclass(frozen=True)
class KOptAction:
    """A completed improving k-opt rewiring.

    sequence alternates (u_1, v_1, u_2, v_2, ..., u_k, v_k, u_1): edges
    (u_i, v_i) leave the tour, edges (v_i, u_{i+1}) enter it, and the final
    entry closes the cycle back at u_1. gain is the length decrease; new_order
    is the resulting tour order.
    """

    sequence: tuple
    removed: tuple
    added: tuple
    gain: float
    new_order: np.ndarray

    @property
    def k(self) -> int:
        return len(self.removed)


def _ekey(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def random_tour(n: int, seed) -> Tour:
    """Uniformly random tour from a seeded shuffle; seed may be an int or a
    numpy Generator."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Tour.from_order(rng.permutation(n))


# ---------------------------------------------------------------------------
# 2-opt
# ---------------------------------------------------------------------------

def _two_opt_order(d: np.ndarray, order: np.ndarray) -> np.ndarray:
    """First-improvement 2-opt sweeps until no move improves; mutates order."""
    n = order.shape[0]
    succ = np.empty(n, dtype=order.dtype)

    def rebuild_succ():
        succ[:-1] = order[1:]
        succ[-1] = order[0]

    rebuild_succ()
    improved = True
    while improved:
        improved = False
        i = 0
        while i < n - 1:
            a = order[i]
            b = order[i + 1]
            hi = n if i > 0 else n - 1  # skip the wrap pair (0, n-1)
            if i + 2 >= hi:
                i += 1
                continue
            c = order[i + 2:hi]
            e = succ[i + 2:hi]
            delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
            hit = np.flatnonzero(delta < -TWO_OPT_EPS)
            if hit.size:
                j = i + 2 + int(hit[0])
                order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                rebuild_succ()
                improved = True
            else:
                i += 1
    return order


def two_opt_improve(d: np.ndarray, tour: Tour) -> Tour:
    """Run 2-opt from the given tour until no improving exchange exists."""
    if tour.n != d.shape[0]:
        raise ValueError("tour and distance matrix sizes differ")
    return Tour.from_order(_two_opt_order(d, tour.order.copy()))


# ---------------------------------------------------------------------------
# Edge selection
# ---------------------------------------------------------------------------

def exploration_bonus(alpha: float, total_expansions: float, edge_count: float) -> float:
    """Visit-count bonus alpha * sqrt(log(S + 1) / (N + 1)); the S and N
    arguments accept floats so closed-form values are testable directly."""
    return alpha * math.sqrt(math.log(total_expansions + 1.0) / (edge_count + 1.0))


def select_next_city(
    u: int,
    cand: CandidateLists,
    pruned: np.ndarray,
    stats: SearchStats,
    alpha: float,
    rng: np.random.Generator,
    exclude=frozenset(),
) -> Optional[int]:
    """Sample the next city from u's candidate list.

    Weight of candidate v is max(pruned[u, v] + bonus, floor) where the bonus
    is the exploration term (zero when alpha == 0). Candidates in `exclude`
    are skipped. Returns None when no candidate is feasible (a dead end: the
    caller abandons the construction attempt). Count bookkeeping stays with
    the caller.
    """
    row = pruned[u]
    feas = []
    weights = []
    total = 0.0
    counts = stats.edge_use_counts
    for c in cand[u]:
        c = int(c)
        if c in exclude:
            continue
        w = float(row[c])
        if alpha > 0.0:
            n_uv = counts.get(_ekey(u, c), 0)
            w += exploration_bonus(alpha, stats.total_expansions, n_uv)
        if w < WEIGHT_FLOOR:
            w = WEIGHT_FLOOR
        feas.append(c)
        weights.append(w)
        total += w
    if not feas:
        return None
    r = rng.random() * total
    acc = 0.0
    for c, w in zip(feas, weights):
        acc += w
        if r < acc:
            return c
    return feas[-1]  # guard against float round-off at the boundary


# ---------------------------------------------------------------------------
# k-opt construction
# ---------------------------------------------------------------------------

def _candidate_rows(cand: CandidateLists) -> tuple:
    """Candidate lists as plain int tuples (faster to iterate than arrays)."""
    return tuple(tuple(int(c) for c in cl) for cl in cand.lists)


def _construct(
    d: np.ndarray,
    order: np.ndarray,
    pos: np.ndarray,
    cand_rows: tuple,
    pruned: np.ndarray,
    stats: SearchStats,
    alpha: float,
    k_cap: int,
    rng: np.random.Generator,
) -> Optional[KOptAction]:
    """One sequential construction attempt; returns an improving action or
    None (discard).

    The state is a Hamiltonian path stored in `path` with fixed endpoint
    path[0] = u_1 and moving endpoint path[-1]. Adding an edge from the
    moving endpoint to an interior city forces removal of that city's edge
    toward the moving side (the only choice that keeps a Hamiltonian path),
    implemented as a suffix reversal. The candidate weighting below inlines
    the select_next_city rule: max(heat + exploration bonus, floor), with
    infeasible cities (closing anchor, current path neighbour, re-adds of
    removed edges, forced removal of added edges) skipped.
    """
    n = order.shape[0]
    u1 = int(rng.integers(n))
    i1 = int(pos[u1])
    # path = u1 followed by the rest of the cycle walked backward, so the
    # moving endpoint starts at u1's tour successor
    path = np.empty(n, dtype=np.int64)
    path[0] = u1
    if i1 > 0:
        path[1:i1 + 1] = order[i1 - 1::-1]
    if i1 < n - 1:
        path[i1 + 1:] = order[:i1:-1]
    indices = np.arange(n)
    ppos = np.empty(n, dtype=np.int64)
    ppos[path] = indices

    d_at = d.item
    hp_at = pruned.item
    path_at = path.item
    ppos_at = ppos.item
    rand = rng.random
    log = math.log
    sqrt = math.sqrt

    v1 = int(path_at(n - 1))
    removed = [(u1, v1)]
    removed_set = {(u1, v1) if u1 < v1 else (v1, u1)}
    added = []
    added_set = set()
    seq = [u1, v1]
    gain = d_at(u1, v1)  # running sum(removed) - sum(added)
    counts = stats.edge_use_counts
    k = 1
    while True:
        vi = path_at(n - 1)
        close_gain = gain - d_at(vi, u1)
        # a closure that would re-add the anchor edge (only possible when the
        # moving endpoint returns to v_1) is degenerate: the same rewiring is
        # a shorter chain anchored elsewhere, so it is not accepted here
        if close_gain > MIN_GAIN and vi != v1:
            added.append((vi, u1) if vi < u1 else (u1, vi))
            seq.append(u1)
            return KOptAction(
                sequence=tuple(seq),
                removed=tuple((a, b) if a < b else (b, a) for a, b in removed),
                added=tuple(added),
                gain=close_gain,
                new_order=path.copy(),
            )
        if k >= k_cap:
            return None
        neighbor = path_at(n - 2)
        feas = []
        weights = []
        total = 0.0
        if alpha > 0.0:
            bonus_num = log(stats.total_expansions + 1.0)
        for c in cand_rows[vi]:
            if c == u1 or c == neighbor:
                continue
            ekey = (vi, c) if vi < c else (c, vi)
            if ekey in removed_set:
                continue
            j = ppos_at(c)
            nxt = path_at(j + 1)
            if ((c, nxt) if c < nxt else (nxt, c)) in added_set:
                continue
            w = hp_at(vi, c)
            if alpha > 0.0:
                w += alpha * sqrt(bonus_num / (counts.get(ekey, 0) + 1.0))
            if w < WEIGHT_FLOOR:
                w = WEIGHT_FLOOR
            feas.append(c)
            weights.append(w)
            total += w
        if not feas:
            return None
        r = rand() * total
        acc = 0.0
        idx = len(feas) - 1
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                idx = i
                break
        u_next = feas[idx]
        key = (vi, u_next) if vi < u_next else (u_next, vi)
        counts[key] = counts.get(key, 0) + 1
        j = ppos_at(u_next)
        v_next = path_at(j + 1)
        added.append(key)
        added_set.add(key)
        removed.append((u_next, v_next))
        removed_set.add((u_next, v_next) if u_next < v_next else (v_next, u_next))
        gain += d_at(u_next, v_next) - d_at(vi, u_next)
        seq.append(u_next)
        seq.append(v_next)
        # rewire: reverse the suffix after u_next
        path[j + 1:] = path[j + 1:][::-1]
        ppos[path[j + 1:]] = indices[j + 1:]
        k += 1


def construct_kopt_action(
    d: np.ndarray,
    tour: Tour,
    cand: CandidateLists,
    pruned: np.ndarray,
    stats: SearchStats,
    params: SearchParams,
    rng: np.random.Generator,
    k_cap: Optional[int] = None,
) -> Optional[KOptAction]:
    """Attempt one k-opt construction from the tour.

    The anchor city is drawn uniformly; its tour successor seeds the path.
    Returns the completed improving action, or None when the attempt dead-ends
    or hits the removed-edge cap (k_cap; sampled from params.k_range when not
    given). Edge-use counts in stats are updated for every stochastic
    selection, including attempts that end up discarded.
    """
    if k_cap is None:
        k_cap = int(rng.integers(params.k_range[0], params.k_range[1]))
    return _construct(d, tour.order, tour.position, _candidate_rows(cand),
                      pruned, stats, params.alpha, k_cap, rng)


def _expand(
    d: np.ndarray,
    order: np.ndarray,
    pos: np.ndarray,
    cand_rows: tuple,
    pruned: np.ndarray,
    stats: SearchStats,
    params: SearchParams,
    k_cap: int,
    rng: np.random.Generator,
    deadline: Optional[float],
) -> Optional[KOptAction]:
    """Try up to expand_budget constructions, keep the largest-gain action."""
    best: Optional[KOptAction] = None
    for _ in range(params.expand_budget):
        if deadline is not None and time.perf_counter() >= deadline:
            break
        stats.total_expansions += 1
        action = _construct(d, order, pos, cand_rows, pruned, stats,
                            params.alpha, k_cap, rng)
        if action is not None and (best is None or action.gain > best.gain):
            best = action
    return best


def expand_node(
    d: np.ndarray,
    tour: Tour,
    cand: CandidateLists,
    pruned: np.ndarray,
    stats: SearchStats,
    params: SearchParams,
    rng: np.random.Generator,
    k_cap: Optional[int] = None,
):
    """Best-first expansion of one search node.

    Runs up to params.expand_budget construction attempts and returns
    (improved Tour, applied KOptAction) for the shortest completed candidate,
    or None when no attempt improved the tour.
    """
    if k_cap is None:
        k_cap = int(rng.integers(params.k_range[0], params.k_range[1]))
    best = _expand(d, tour.order, tour.position, _candidate_rows(cand), pruned,
                   stats, params, k_cap, rng, deadline=None)
    if best is None:
        return None
    return Tour.from_order(best.new_order), best


def update_heatmap(
    pruned: np.ndarray,
    action: KOptAction,
    length_old: float,
    length_new: float,
    beta: float,
) -> None:
    """Raise the heat of the action's added edges after an improving move.

    Each added edge (including the closing edge) gains
    beta * (exp((length_old - length_new) / length_old) - 1), applied to both
    (i, j) and (j, i) so the matrix stays symmetric. No-op unless
    length_new < length_old.
    """
    if length_new >= length_old or beta == 0.0:
        return
    inc = beta * (math.exp((length_old - length_new) / length_old) - 1.0)
    for a, b in action.added:
        pruned[a, b] += inc
        pruned[b, a] += inc


def run_search(
    inst: Instance,
    pruned: np.ndarray,
    params: SearchParams,
    seed: int,
):
    """Full multi-round search; returns (best Tour, SearchStats).

    Each round draws a fresh removed-edge cap from k_range and a candidate
    construction mode (updated pruned heat vs raw distance), builds a random
    tour, 2-opts it, then expands best-first until a whole expansion yields no
    improvement. Heat updates survive into later rounds. The run stops at the
    wall-clock deadline or after max_rounds, whichever comes first.
    """
    if params.time_budget is None and params.max_rounds is None:
        raise ValueError("a budget is required: set time_budget and/or max_rounds")
    n = inst.n
    d = distance_matrix(inst)
    if pruned.shape != (n, n):
        raise ValueError(f"pruned heat map shape {pruned.shape} does not match n={n}")
    hp = np.array(pruned, dtype=np.float64, copy=True)
    rng = np.random.default_rng(seed)
    stats = SearchStats()
    deadline = None
    if params.time_budget is not None:
        deadline = time.perf_counter() + params.time_budget
    best_order: Optional[np.ndarray] = None
    best_len = math.inf
    rounds = 0
    while True:
        if params.max_rounds is not None and rounds >= params.max_rounds:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break
        rounds += 1
        k_cap = int(rng.integers(params.k_range[0], params.k_range[1]))
        mode = HEAT_MODE if rng.integers(2) == 0 else DISTANCE_MODE
        source = hp if mode == HEAT_MODE else d
        m_eff = min(params.m, n - 1)  # presets can exceed tiny instances
        cand_rows = _candidate_rows(candidate_lists(source, m_eff, mode))
        order = rng.permutation(n).astype(np.int64)
        _two_opt_order(d, order)
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        cur_len = order_length(d, order)
        if cur_len < best_len:
            best_len = cur_len
            best_order = order.copy()
        while True:
            if deadline is not None and time.perf_counter() >= deadline:
                break
            action = _expand(d, order, pos, cand_rows, hp, stats, params, k_cap,
                             rng, deadline)
            if action is None:
                break
            new_len = cur_len - action.gain
            update_heatmap(hp, action, cur_len, new_len, params.beta)
            order = action.new_order
            pos[order] = np.arange(n)
            cur_len = new_len
            if cur_len < best_len:
                best_order = order.copy()
                best_len = order_length(d, best_order)  # exact, not incremental
        stats.round_best_lengths.append(best_len)
    stats.rounds = rounds
    stats.best_length = best_len
    stats.best_tour = Tour.from_order(best_order) if best_order is not None else None
    return stats.best_tour, stats


# ---------------------------------------------------------------------------
# Tour file format
# ---------------------------------------------------------------------------

def format_tour(tour: Tour, length: float) -> str:
    rows = [
        TOUR_HEADER,
        str(tour.n),
        " ".join(str(int(c)) for c in tour.order),
        repr(float(length)),
    ]
    return "\n".join(rows) + "\n"


def parse_tour(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != TOUR_HEADER:
        raise ValueError(f"not a {TOUR_HEADER} document")
    n = int(lines[1])
    order = np.array([int(v) for v in lines[2].split()], dtype=np.int64)
    if order.shape[0] != n:
        raise ValueError(f"expected {n} cities in the order line, got {order.shape[0]}")
    length = float(lines[3])
    return Tour.from_order(order), length
