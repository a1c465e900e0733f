"""Power-minimizing resource allocation for SWIPT-enabled hybrid TDMA-NOMA downlinks.

Modules
-------
sysmodel   user placement, path-loss channels, channel-strength grouping
metrics    exact SINR / rate / harvested-power evaluators and feasibility checks
qpcore     dense interior-point QP solver with KKT certificates
sca        successive-convex-approximation solver for the joint design
tdma       exact baseline: one user per slot, closed-form per-user optimum
oracle     brute-force grid-search reference and certification
bench      Monte Carlo sweep / convergence-trace harness (CSV outputs)
cli        command-line entry points (swiptnoma sweep | converge | certify)
"""

from .sysmodel import SystemConfig, SystemInstance, build_instance, channel_gain, make_groups
from .metrics import (
    BETA_EPS,
    DesignVariables,
    FeasibilityReport,
    Tolerances,
    check_feasible,
    effective_sinr,
    group_view,
    harvested_power,
    rate,
    sinr_decode,
    total_transmit_power,
)
from .qpcore import QpProblem, QpSolution, check_kkt, dump_problem, solve_qp

__all__ = [
    "BETA_EPS",
    "DesignVariables",
    "FeasibilityReport",
    "QpProblem",
    "QpSolution",
    "SystemConfig",
    "SystemInstance",
    "Tolerances",
    "build_instance",
    "channel_gain",
    "check_feasible",
    "check_kkt",
    "dump_problem",
    "effective_sinr",
    "group_view",
    "harvested_power",
    "make_groups",
    "rate",
    "sinr_decode",
    "solve_qp",
    "total_transmit_power",
]
