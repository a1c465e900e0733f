"""Exact solver for the conventional-TDMA comparison design.

Each user gets its own slot of length T / K, so the design decouples into
K independent 2-variable problems.  For one user with gain |h|^2 the
required squared power is

    rate target:     P >= A(beta) = (2^(R_min/t) - 1)(beta s2 + s2_id) / (beta |h|^2)
    harvest target:  P >= B(beta) = P_min / (eta (1 - beta) |h|^2)

A is strictly decreasing in beta and B strictly increasing, so the optimum
of max(A, B) sits at their unique crossing when both targets are positive,
otherwise at the analytic endpoint limit.  Solving this exactly keeps
approximation noise out of the baseline comparison; a flag reuses the main
iterative machinery instead (one singleton group per user) for
methodological parity.
"""

from dataclasses import dataclass, replace

import numpy as np

from .metrics import DesignVariables
from .sysmodel import SystemConfig, SystemInstance, make_groups


class InfeasibleError(RuntimeError):
    """The per-user targets cannot be met with any finite power."""


@dataclass(frozen=True)
class TdmaUserSolution:
    power: float                 # p^2, W
    split: float                 # beta
    binding: str                 # 'rate' | 'harvest' | 'both'


def _rate_power(beta: float, gain: float, cfg: SystemConfig, slot: float) -> float:
    factor = 2.0 ** (cfg.min_rate / slot) - 1.0
    return factor * (beta * cfg.noise_antenna + cfg.noise_id) / (beta * gain)


def _harvest_power(beta: float, gain: float, cfg: SystemConfig) -> float:
    return cfg.min_harvest / (cfg.eh_efficiency * (1.0 - beta) * gain)


def tdma_user_solve(gain: float, cfg: SystemConfig) -> TdmaUserSolution:
    """Minimal squared power and splitting ratio for one user alone in its slot."""
    if gain <= 0.0:
        if cfg.min_rate > 0.0 or cfg.min_harvest > 0.0:
            raise InfeasibleError("zero channel gain with positive QoS targets")
        return TdmaUserSolution(power=0.0, split=0.5, binding="both")
    slot = cfg.frame_time / cfg.k
    if cfg.min_harvest > 0.0 and cfg.eh_efficiency == 0.0:
        raise InfeasibleError("harvest target positive but conversion efficiency is zero")
    if cfg.min_rate == 0.0 and cfg.min_harvest == 0.0:
        return TdmaUserSolution(power=0.0, split=0.5, binding="both")
    if cfg.min_harvest == 0.0:
        # all signal to decoding; the rate bound approaches its beta -> 1 limit
        return TdmaUserSolution(power=_rate_power(1.0, gain, cfg, slot),
                                split=1.0, binding="rate")
    if cfg.min_rate == 0.0:
        # all signal to harvesting; the harvest bound approaches its beta -> 0 limit
        return TdmaUserSolution(power=_harvest_power(0.0, gain, cfg),
                                split=0.0, binding="harvest")
    # crossing of the decreasing rate bound and the increasing harvest bound
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _rate_power(mid, gain, cfg, slot) > _harvest_power(mid, gain, cfg):
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    power = max(_rate_power(beta, gain, cfg, slot), _harvest_power(beta, gain, cfg))
    return TdmaUserSolution(power=power, split=beta, binding="both")


def tdma_solve(instance: SystemInstance, cfg: SystemConfig, method: str = "exact"):
    """Per-user solutions plus total transmit power (the design decouples).

    method='exact' uses the closed-form/bisection per-user optimum;
    method='sca' reroutes through the main iterative solver on an
    equivalent singleton-group system (slot T / K) for parity checks.
    """
    if method == "exact":
        solutions = [tdma_user_solve(g, cfg) for g in instance.gains]
        total = float(sum(s.power for s in solutions))
        return solutions, total
    if method != "sca":
        raise ValueError(f"unknown method {method!r}")
    from .sca import solve_per_group

    cfg1 = replace(cfg, groups=cfg.k, users_per_group=1)
    instance1 = SystemInstance(
        distances=instance.distances,
        gains=instance.gains,
        sorted_order=instance.sorted_order,
        grouping=make_groups(instance.sorted_order.tolist(), cfg.k, 1),
        slot_time=cfg1.slot_time,
    )
    report = solve_per_group(instance1, cfg1)
    if not report.success:
        raise InfeasibleError("iterative TDMA solve did not converge to a feasible point")
    solutions = [
        TdmaUserSolution(power=float(report.final_vars.power[u]),
                         split=float(report.final_vars.split[u]),
                         binding="both")
        for u in range(cfg.k)
    ]
    return solutions, report.objective


def tdma_vars(solutions, k: int) -> DesignVariables:
    """Pack per-user solutions into the shared variable container."""
    return DesignVariables(
        np.array([s.power for s in solutions]),
        np.array([s.split for s in solutions]),
    )
