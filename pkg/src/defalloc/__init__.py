"""Defensive resource allocation simulator.

Two-phase per-slot decision making under statistically unknown Bernoulli
attacks: a risk-bounded allocation phase followed by a minimum-cost transfer
phase, with online attack-statistics estimation, four decision policies, and
a reproducible experiment harness.
"""

from .allocator import (
    SurrogateTerms,
    alpha_epsilon_ladder,
    brute_force_allocation,
    budget_epsilon_ladder,
    grid_error_bound,
    solve_allocation,
    surrogate,
)
from .belief import BeliefState, belief_error, init_belief, known_belief, update_belief
from .flow import (
    FlowNetwork,
    apply_transfers,
    build_flow_network,
    min_cost_flow,
    min_cost_flow_lp_reference,
)
from .harness import (
    ExperimentConfig,
    compare_methods,
    generate_instance,
    learning_curve,
    pareto_nondominated,
    rng_stream,
    sample_attacks,
    sweep_alpha,
    sweep_attack,
    sweep_resource,
)
from .kernels import active_backend, set_backend
from .model import (
    Allocation,
    AttackTrace,
    InfeasibleError,
    Instance,
    NodeParams,
    Nodes,
    RiskParams,
    TransferPlan,
    damage,
    expected_damage,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    plan_cost,
    save_instance,
    slot_damage,
)
from .policies import (
    POLICY_IDS,
    RunMetrics,
    SlotResult,
    greedy_policy,
    initial_allocation,
    kn_mean_policy,
    oracle_policy,
    run_episode,
    un_mean_policy,
)

__version__ = "0.1.0"
