"""Allocation of stream-processing task graphs onto uniform resources."""

from .errors import *  # noqa: F401,F403
from .graph import (  # noqa: F401
    Allocation,
    CostReport,
    StreamingGraph,
    check_comp_constrained_bound,
    diameter,
    graph_from_dict,
    graph_to_dict,
    hat_cost,
    processing_cost,
    sinks,
    sources,
    streaming_cost,
    transfer_cost,
    validate_graph,
)
from .spd import (  # noqa: F401
    Inner,
    Leaf,
    SpdTree,
    compose_parallel,
    compose_serial,
    expand,
    leaf_count,
    leaves,
    parallel,
    parse_tree,
    serial,
    serialize_tree,
    tree_from_dict,
    tree_to_dict,
    tree_weight_sum,
    validate_tree,
)
from .continuous import (  # noqa: F401
    AnnotatedTree,
    CappedResult,
    ShareAssignment,
    compute_mapping,
    compute_weights,
    continuous_cost,
    optimal_delta,
    solve_capped,
)
from .oracle import (  # noqa: F401
    brute_force_optimal,
    default_oracle_limit,
    enumerate_paths,
    numeric_continuous_min,
)
from .discrete import (  # noqa: F401
    ApproximationDiagnostics,
    DiscreteSolveReport,
    allocate,
    approximation_diagnostics,
    block_size,
    pack,
)
from .baselines import (  # noqa: F401
    GreedyPolicy,
    GreedyTrace,
    balanced_avg,
    greedy_collocate,
    greedy_trace,
    trivial_single,
)
from .instances import (  # noqa: F401
    gen_greedy_worstcase,
    gen_parallel_outlier,
    gen_partition_reduction,
    gen_random_spd,
    gen_subsetsum_reduction,
)

__version__ = "0.1.0"
