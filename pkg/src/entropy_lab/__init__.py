"""Generalized entropy powers, the diffusion flows that evolve them, and numerical checks."""

from .checks import (
    CheckReport,
    check_concavity,
    check_dilation_invariance,
    check_key_inequality,
    check_linear_power,
    check_production_identities,
)
from .epi import EpiCase, check_epi, convolve
from .functionals import (
    FunctionalSnapshot,
    bc_entropy_power,
    dilate,
    e_p_moment,
    entropy_power,
    fisher_information,
    q_exp,
    q_functional,
    q_log,
    renyi_entropy,
    s_pq_scalar,
    second_order_functional,
    sharma_mittal_entropy,
    snapshot,
)
from .grid import DomainError, GridDensity, LimitBranchError, Orders
from .profiles import barenblatt, gaussian, mixture, uniform
from .solver import CFLError, FlowSpec, NumericalAbort, Trajectory, solve_pme, solve_sm_flow

__all__ = [
    "CFLError",
    "CheckReport",
    "DomainError",
    "EpiCase",
    "FlowSpec",
    "FunctionalSnapshot",
    "GridDensity",
    "LimitBranchError",
    "NumericalAbort",
    "Orders",
    "Trajectory",
    "barenblatt",
    "bc_entropy_power",
    "check_concavity",
    "check_dilation_invariance",
    "check_epi",
    "check_key_inequality",
    "check_linear_power",
    "check_production_identities",
    "convolve",
    "dilate",
    "e_p_moment",
    "entropy_power",
    "fisher_information",
    "gaussian",
    "mixture",
    "q_exp",
    "q_functional",
    "q_log",
    "renyi_entropy",
    "s_pq_scalar",
    "second_order_functional",
    "sharma_mittal_entropy",
    "snapshot",
    "solve_pme",
    "solve_sm_flow",
    "uniform",
]
