"""Bayesian online learning for energy-efficient shortest-path navigation."""

from .energy import (
    MODEL_LOG,
    MODEL_RECT,
    BeliefState,
    GaussianBelief,
    LogGaussianBelief,
    VehicleParams,
    belief_to_weight,
    gaussian_update,
    init_prior,
    lognormal_likelihood_params,
    lognormal_prior,
    lognormal_update,
    prior_energy,
    rectified_mean,
)
from .environment import (
    SCENARIO_CORRELATED,
    SCENARIO_KNOWN_PRIOR,
    SCENARIO_MISSPECIFIED,
    GroundTruth,
    build_correlated,
    build_known_prior,
    build_misspecified,
    pair_edges,
    prior_beliefs,
    sample_rewards,
)
from .errors import NoPathError, ValidationError
from .graph import EdgeAttributes, Path, RoadGraph, path_weight, shortest_path, validate_graph
from .harness import make_instance, run_cell, sweep
from .netio import ScenarioConfig, bundled_network_path, load_config, load_network, save_network
from .policies import (
    BatchSchedule,
    Policy,
    QueuedDelayWrapper,
    agent_label,
    bayesucb_weights,
    eps_greedy_select,
    greedy_weights,
    make_policy,
    ts_weights,
)
from .simulator import (
    OnlineAgent,
    RegretTrace,
    bayes_regret_estimate,
    run_batched,
    run_delayed,
    run_fleet,
    run_single,
)
from .synthgen import SynthSpec, generate

__version__ = "0.1.0"
