"""Line-embedded small-world overlays: greedy routing under failures and
churn, plus the hitting-time bound machinery behind them."""

from .analysis import (
    DropProfile,
    Interval,
    LowerBoundConfig,
    chain_equivalence_tv,
    check_boundary_points,
    karp_upper_bound,
    mean_lower_bound,
    single_link_drift,
    single_link_profile,
    split_interval,
    step_interval,
    step_point,
    tree_lower_bound,
)
from .dynamics import ReplacementPolicy, join, leave, locate_or_nearest, replacement_decision
from .harness import ExperimentConfig, TrialStats, run_experiment
from .linkgen import (
    BernoulliOffsets,
    DeterministicBaseB,
    InversePowerLaw,
    PowersOfB,
    deterministic_links,
    harmonic_weights,
    poisson_sample,
    power_links,
    sample_long_links,
    sample_offsets,
)
from .overlay import (
    OverlayGraph,
    apply_link_failures,
    apply_node_failures,
    build,
    build_binomial_presence,
)
from .routing import (
    Backtrack,
    RandomRestart,
    RouteResult,
    Sidedness,
    Status,
    Terminate,
    greedy_step,
    route,
    route_deterministic,
)

__all__ = [name for name in dir() if not name.startswith("_")]
