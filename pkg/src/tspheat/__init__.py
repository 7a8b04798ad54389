"""Heat-map-guided TSP heuristic toolkit.

Pipeline: per-instance surrogate-loss optimization produces an edge heat
map, edge elimination prunes it to per-city candidate sets, and a
best-first k-opt local search decodes tours. Exact small-instance oracles
back the verification story.
"""

from .candidates import (
    CandidateLists,
    candidate_lists,
    edge_set,
    overlap_coefficient,
    top_m_filter,
)
from .bench import (
    BenchResult,
    held_karp_exact,
    nn_two_opt_baseline,
    solve_pipeline,
    coverage_report,
    emit_tour_svg,
    tour_edges,
)
from .generator import TrainConfig, TrainTrace, init_logits, optimize_heatmap
from .heatmap import (
    LossBreakdown,
    NumericError,
    column_softmax,
    indicator_to_heatmap,
    loss_gradient,
    permutation_to_cycle,
    shift_matrix,
    surrogate_loss,
    verify_hamiltonian_heatmap,
)
from .instances import (
    Instance,
    Tour,
    TsplibParseError,
    adjacency_weights,
    distance_matrix,
    generate_random,
    parse_tsplib,
    tour_length,
)
from .search import (
    PRESETS,
    KOptAction,
    SearchParams,
    SearchStats,
    construct_kopt_action,
    expand_node,
    random_tour,
    run_search,
    select_next_city,
    two_opt_improve,
    update_heatmap,
)

__version__ = "0.1.0"
