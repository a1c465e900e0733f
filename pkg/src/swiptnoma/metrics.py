"""Exact evaluators for the physical model and the joint design's feasibility.

Everything here works on the original, non-approximated expressions; the
iterative solver and the brute-force reference are both certified against
this module.

Powers are handled as squared amplitudes p^2 throughout (every constraint
of the design is affine or bilinear in p^2), and splitting ratios beta are
the fraction of received signal routed to information decoding.

Order-index convention: within a group, index 0 is the strongest user and
gains are non-increasing.  Receiver m can decode message d only for
d >= m: it first cancels messages K_i-1 .. d+1, then sees messages
0 .. d-1 as residual interference.
"""

from dataclasses import dataclass, field

import numpy as np

from .sysmodel import SystemConfig, SystemInstance

# Splitting ratios are kept this far inside (0, 1) by the iterative solver
# and the grid reference, so the decoding-stage expressions stay meaningful.
BETA_EPS = 1e-4


@dataclass(frozen=True)
class GroupView:
    """Group-local slice of an instance: user ids and gains in NOMA order."""

    users: tuple                 # user ids, position = order index
    gains: np.ndarray            # (K_i,), non-increasing
    slot_time: float             # s

    @property
    def size(self) -> int:
        return len(self.users)


def group_view(instance: SystemInstance, i: int) -> GroupView:
    users = instance.grouping[i]
    return GroupView(
        users=users,
        gains=instance.gains[list(users)],
        slot_time=instance.slot_time,
    )


@dataclass
class DesignVariables:
    """Per-user decision variables, indexed by original user id.

    power[u] is the squared power p^2 in watts; split[u] is beta in [0, 1].
    """

    power: np.ndarray
    split: np.ndarray

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=float)
        self.split = np.asarray(self.split, dtype=float)
        if self.power.shape != self.split.shape:
            raise ValueError("power and split must have matching shapes")
        if np.any(self.power < 0):
            raise ValueError("powers must be non-negative")
        if np.any(self.split < 0) or np.any(self.split > 1):
            raise ValueError("splitting ratios must lie in [0, 1]")

    def copy(self) -> "DesignVariables":
        return DesignVariables(self.power.copy(), self.split.copy())


def zeros(k: int) -> DesignVariables:
    return DesignVariables(np.zeros(k), np.full(k, 0.5))


def sinr_decode(m: int, d: int, group: GroupView, vars: DesignVariables,
                cfg: SystemConfig) -> float:
    """SINR at receiver m (order index) when decoding message d, d >= m.

    beta_m |h_m|^2 p_d^2 / (beta_m |h_m|^2 sum_{s<d} p_s^2
                            + beta_m sigma^2 + sigma_id^2);
    the interference sum is empty for d = 0.
    """
    if not 0 <= m <= d < group.size:
        raise ValueError(f"receiver {m} cannot decode message {d}")
    users = group.users
    beta = vars.split[users[m]]
    gain = group.gains[m]
    interference = 0.0
    for s in range(d):
        interference += vars.power[users[s]]
    num = beta * gain * vars.power[users[d]]
    den = beta * gain * interference + beta * cfg.noise_antenna + cfg.noise_id
    return num / den


def effective_sinr(j: int, group: GroupView, vars: DesignVariables,
                   cfg: SystemConfig) -> float:
    """Decodability bottleneck of message j: min over receivers m <= j.

    User j's message must be decodable at user j itself and at every
    stronger user that cancels it during SIC.
    """
    return min(sinr_decode(m, j, group, vars, cfg) for m in range(j + 1))


def rate(j: int, group: GroupView, vars: DesignVariables,
         cfg: SystemConfig) -> float:
    """Achieved rate of user j in bit/Hz: t_i * log2(1 + effective SINR)."""
    return group.slot_time * np.log2(1.0 + effective_sinr(j, group, vars, cfg))


def harvested_power(j: int, group: GroupView, vars: DesignVariables,
                    cfg: SystemConfig) -> float:
    """Harvested power at user j: eta (1 - beta_j) |h_j|^2 sum_s p_s^2.

    Only the signal part contributes; stage noises are negligible for
    harvesting and do not appear.
    """
    users = group.users
    total = 0.0
    for s in range(group.size):
        total += vars.power[users[s]]
    return cfg.eh_efficiency * (1.0 - vars.split[users[j]]) * group.gains[j] * total


def total_transmit_power(vars: DesignVariables) -> float:
    """Base-station objective: sum of all p^2."""
    return float(np.sum(vars.power))


@dataclass(frozen=True)
class Tolerances:
    """Per-constraint-family feasibility tolerances, in natural units.

    Rates in bit/Hz; harvested power relative to the target (absolute
    fallback when the target is zero); power ordering and splitting-ratio
    bounds exact by default.
    """

    rate: float = 1e-9
    harvest_rel: float = 1e-6
    harvest_abs: float = 1e-15
    sic: float = 0.0
    beta: float = 0.0

    def harvest(self, min_harvest: float) -> float:
        return self.harvest_rel * min_harvest if min_harvest > 0 else self.harvest_abs


@dataclass
class FeasibilityReport:
    """Slacks of the original constraints; positive slack = satisfied."""

    rate_slack: np.ndarray       # (K,) R_j - R_min, bit/Hz
    harvest_slack: np.ndarray    # (K,) P_j - P_min, W
    sic_violation: np.ndarray    # (C,) max adjacent p_j^2 - p_{j+1}^2, clipped at 0
    beta_violation: float        # max excess over the [0, 1] bounds
    feasible: bool

    def worst_violation(self) -> float:
        """Largest violation across families (mixed natural units, 0 if feasible)."""
        return max(
            0.0,
            float(-np.min(self.rate_slack)),
            float(-np.min(self.harvest_slack)),
            float(np.max(self.sic_violation)),
            self.beta_violation,
        )


def check_feasible(instance: SystemInstance, vars: DesignVariables,
                   cfg: SystemConfig, tol: Tolerances = Tolerances(),
                   groups=None) -> FeasibilityReport:
    """Evaluate the original constraints and report per-constraint slacks.

    ``groups`` restricts the check to a subset of group indices (used by
    the per-group solver path); users outside those groups get +inf slack.
    """
    k = len(vars.power)
    rate_slack = np.full(k, np.inf)
    harvest_slack = np.full(k, np.inf)
    group_ids = range(len(instance.grouping)) if groups is None else groups
    sic_violation = np.zeros(len(instance.grouping))
    for i in group_ids:
        g = group_view(instance, i)
        for j, u in enumerate(g.users):
            rate_slack[u] = rate(j, g, vars, cfg) - cfg.min_rate
            harvest_slack[u] = harvested_power(j, g, vars, cfg) - cfg.min_harvest
        worst = 0.0
        for j in range(g.size - 1):
            gap = vars.power[g.users[j]] - vars.power[g.users[j + 1]]
            worst = max(worst, gap)
        sic_violation[i] = worst
    checked = [u for i in group_ids for u in instance.grouping[i]]
    beta_violation = 0.0
    for u in checked:
        beta_violation = max(beta_violation, vars.split[u] - 1.0, -vars.split[u])
    feasible = (
        np.min(rate_slack[checked], initial=np.inf) >= -tol.rate
        and np.min(harvest_slack[checked], initial=np.inf) >= -tol.harvest(cfg.min_harvest)
        and np.max(sic_violation, initial=0.0) <= tol.sic
        and beta_violation <= tol.beta
    )
    return FeasibilityReport(
        rate_slack=rate_slack,
        harvest_slack=harvest_slack,
        sic_violation=sic_violation,
        beta_violation=beta_violation,
        feasible=bool(feasible),
    )
