"""SimRank similarities on uncertain directed graphs.

Arcs carry independent existence probabilities; similarities are defined
over the induced distribution of possible worlds.  The package provides
exact transition-probability materialization, Monte-Carlo estimation, a
two-stage hybrid, a bit-parallel sampling accelerator, a brute-force
enumeration oracle for testing, a scikit-learn style estimator, and a
command-line interface.
"""

from .accel import (
    CountingTable,
    FilterVectors,
    build_filter_vectors,
    decode_walks,
    estimate_meeting_bitset,
    propagate,
    simrank_speedup,
    simrank_two_stage,
    two_stage_bound,
)
from .estimator import SimRankEstimator
from .graph import (
    DeterministicGraph,
    GraphFormatError,
    UncertainGraph,
    degenerate,
    gen_rmat,
    load_edge_list,
    sample_world,
    save_edge_list,
)
from .sampling import (
    estimate_meeting,
    required_samples,
    sample_walk,
    sample_walks,
    simrank_sampling,
)
from .simrank import (
    SimEstimate,
    convergence_bound,
    meeting_prob_exact,
    simrank_baseline,
)
from .transmat import (
    MatrixStore,
    TransMatrix,
    WalkBudgetError,
    one_step_matrix,
    read_column,
    trans_pr,
)
from .walks import (
    extend_walk_probability,
    girth,
    out_degree_distribution,
    vertex_factor,
    walk_probability,
)

__version__ = "0.1.0"

__all__ = [
    "CountingTable",
    "DeterministicGraph",
    "FilterVectors",
    "GraphFormatError",
    "MatrixStore",
    "SimEstimate",
    "SimRankEstimator",
    "TransMatrix",
    "UncertainGraph",
    "WalkBudgetError",
    "build_filter_vectors",
    "convergence_bound",
    "decode_walks",
    "degenerate",
    "estimate_meeting",
    "estimate_meeting_bitset",
    "extend_walk_probability",
    "gen_rmat",
    "girth",
    "load_edge_list",
    "meeting_prob_exact",
    "one_step_matrix",
    "out_degree_distribution",
    "propagate",
    "read_column",
    "required_samples",
    "sample_walk",
    "sample_walks",
    "sample_world",
    "save_edge_list",
    "simrank_baseline",
    "simrank_sampling",
    "simrank_speedup",
    "simrank_two_stage",
    "trans_pr",
    "two_stage_bound",
    "vertex_factor",
    "walk_probability",
]
