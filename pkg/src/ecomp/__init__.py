"""Joint transmit-power allocation and inter-station energy transfer for a
renewable-powered cooperative downlink cluster.

The library solves the weighted sum-rate maximization over per-terminal
powers and pairwise lossy energy transfers between base stations, plus
the reduced-cooperation baselines, a brute-force verification oracle,
and a Monte-Carlo scenario harness with a CLI front end.
"""

from .baselines import SchemeId, solve_comm_only, solve_energy_only, solve_no_coop
from .channel import (ClusterChannel, DegeneracyError, FeasibilityError,
                      ScenarioGeometry, ZfGains, generate_rayleigh,
                      pathloss_variance, per_bs_zf_gains,
                      strongest_channel_association, variance_matrix, zf_gains)
from .energy import (EnergyState, TransferModel, as_beta_matrix,
                     available_power, grid_neutrality_check,
                     power_region_boundary)
from .oracle import grid_search_p1, kkt_residual, waterfill_sum_power
from .profiles import EnergyProfile, ProfileError, bs_budgets_at, load_profiles
from .runner import ResultRow, ResultTable, emit_results, parse_results, run_scenario
from .scenario import Scenario, ScenarioError, SchemeSpec, load_scenario, scenario_from_mapping
from .simplex import InfeasibleError, phase1_feasible
from .solver import Solution, recover_transfers, solve_dual, solve_p1

__all__ = [
    "ClusterChannel", "DegeneracyError", "EnergyProfile", "EnergyState",
    "FeasibilityError", "InfeasibleError", "ProfileError", "ResultRow",
    "ResultTable", "Scenario", "ScenarioError", "ScenarioGeometry",
    "SchemeId", "SchemeSpec", "Solution", "TransferModel", "ZfGains",
    "as_beta_matrix", "available_power", "bs_budgets_at", "emit_results",
    "generate_rayleigh", "grid_neutrality_check", "grid_search_p1",
    "kkt_residual", "load_profiles", "load_scenario", "parse_results",
    "pathloss_variance", "per_bs_zf_gains", "phase1_feasible",
    "power_region_boundary", "recover_transfers", "run_scenario",
    "scenario_from_mapping", "solve_comm_only", "solve_dual",
    "solve_energy_only", "solve_no_coop", "solve_p1",
    "strongest_channel_association", "variance_matrix", "waterfill_sum_power",
    "zf_gains",
]

__version__ = "0.1.0"
