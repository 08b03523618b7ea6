"""Equilibrium toolkit for finite wireless power-control games."""

__version__ = "0.1.0"

from .errors import BudgetError, ConfigError, PowergamesError, SolverStallError
from .model import (
    ChannelMatrix,
    GameInstance,
    PayoffTensor,
    PowerGrid,
    build_payoff_tensor,
    build_power_grid,
    efficiency,
    grid_from_levels,
    sinr,
    utility,
)
from .simplex import LpProblem, LpSolution, SimplexOptions, dump_problem, make_problem, solve_lp
from .nash import best_response_set, enumerate_pure_nash, mixed_nash_2x2
from .correlated import (
    CePolytopeSolver,
    EquilibriumReport,
    JointDistribution,
    build_ce_constraints,
    ce_payoff_region,
    ce_violation,
    mediator_sample,
    solve_directional_ce,
    solve_welfare_ce,
)
from .communication import (
    CommDevice,
    GameFamily,
    TypeSpace,
    build_commeq_lp,
    build_type_space,
    commeq_violation,
    conditional_prior,
    run_mediator_session,
    solve_commeq,
)
from .regret import RegretState, empirical_distribution, rm_init, rm_run, rm_step

__all__ = [
    "BudgetError",
    "ConfigError",
    "PowergamesError",
    "SolverStallError",
    "ChannelMatrix",
    "GameInstance",
    "PayoffTensor",
    "PowerGrid",
    "build_payoff_tensor",
    "build_power_grid",
    "efficiency",
    "grid_from_levels",
    "sinr",
    "utility",
    "LpProblem",
    "LpSolution",
    "SimplexOptions",
    "dump_problem",
    "make_problem",
    "solve_lp",
    "best_response_set",
    "enumerate_pure_nash",
    "mixed_nash_2x2",
    "CePolytopeSolver",
    "EquilibriumReport",
    "JointDistribution",
    "build_ce_constraints",
    "ce_payoff_region",
    "ce_violation",
    "mediator_sample",
    "solve_directional_ce",
    "solve_welfare_ce",
    "CommDevice",
    "GameFamily",
    "TypeSpace",
    "build_commeq_lp",
    "build_type_space",
    "commeq_violation",
    "conditional_prior",
    "run_mediator_session",
    "solve_commeq",
    "RegretState",
    "empirical_distribution",
    "rm_init",
    "rm_run",
    "rm_step",
]
