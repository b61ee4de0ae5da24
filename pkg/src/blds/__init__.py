"""Data source selection for Bayesian learning as submodular set covering."""

from blds.model import (
    BldsInstance,
    DistinguishabilityMap,
    Source,
    equivalence_partition,
    indist_intersection,
    indist_set,
    instance_from_partitions,
    instance_from_sets,
    kl_divergence,
    realize_likelihoods,
    validate_instance,
)
from blds.objective import (
    Infeasible,
    active_states,
    check_solvable,
    f_truncated,
    f_value,
    is_feasible,
    steady_state_error,
    z_integer_scaled,
    z_value,
)
from blds.solvers import (
    FastGreedyConfig,
    SetCoverInstance,
    Solution,
    SolveTrace,
    counting_oracle,
    exact_solve,
    fast_greedy_solve,
    greedy_solve,
    reduce_set_cover,
)

__all__ = [
    "BldsInstance",
    "DistinguishabilityMap",
    "Source",
    "equivalence_partition",
    "indist_intersection",
    "indist_set",
    "instance_from_partitions",
    "instance_from_sets",
    "kl_divergence",
    "realize_likelihoods",
    "validate_instance",
    "Infeasible",
    "active_states",
    "check_solvable",
    "f_truncated",
    "f_value",
    "is_feasible",
    "steady_state_error",
    "z_integer_scaled",
    "z_value",
    "FastGreedyConfig",
    "SetCoverInstance",
    "Solution",
    "SolveTrace",
    "counting_oracle",
    "exact_solve",
    "fast_greedy_solve",
    "greedy_solve",
    "reduce_set_cover",
]

__version__ = "0.1.0"
