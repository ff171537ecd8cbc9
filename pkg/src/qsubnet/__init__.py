"""Resource optimisation and satisfiability simulation for interconnected quantum sub-networks."""

__version__ = "0.1.0"

from .costs import TaskThresholds, global_cost, multiplexing_cost, purification_cost
from .entanglement import (chain_fidelity, end_to_end_params, secure_key_rate, swap_oracle_isotropic,
                           swap_pair)
from .netmodel import (Backbone, ParameterDistribution, SubNetworkGraph, SubNetworkProfile,
                       generate_random_subnetwork)
from .optimizer import OptimizationProblem, grid_oracle, solve
from .satsim import SatisfiabilityConfig, p_sat, simulate, sweep_transition

__all__ = [
    "Backbone", "OptimizationProblem", "ParameterDistribution", "SatisfiabilityConfig",
    "SubNetworkGraph", "SubNetworkProfile", "TaskThresholds", "chain_fidelity",
    "end_to_end_params", "generate_random_subnetwork", "global_cost", "grid_oracle",
    "multiplexing_cost", "p_sat", "purification_cost", "secure_key_rate", "simulate", "solve",
    "sweep_transition", "swap_oracle_isotropic", "swap_pair",
]
