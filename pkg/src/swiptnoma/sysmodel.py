"""Downlink system model: user placement, path-loss channels, NOMA grouping.

A base station serves K single-antenna users split into C groups.  Each
group gets an equal time slot t_i = T / C; users inside a group share the
slot via power-domain NOMA.  Channels are pure distance-dependent path
loss: |h|^2 = ref_attenuation / (d / ref_distance)^path_loss_exp, so one
"channel realization" is one random user placement.

Grouping follows the strongest-with-weakest rule: with two users per
group, group i pairs the i-th strongest user with the i-th weakest.  The
same serpentine deal generalizes to other group sizes (strongest group
receives gain ranks 1, 2C, 2C+1, ...).
"""

from dataclasses import dataclass, field

import numpy as np

from .units import db_to_linear, dbm_to_watts


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters.  All values linear: gains dimensionless, powers watts.

    Defaults encode the reference simulation setup: 10 users paired into 5
    groups inside a 10 m cell, -30 dB attenuation at the 1 m reference
    distance, free-space-like exponent 2, -100 dBm/Hz noise densities with
    bandwidth normalized to 1 Hz, 75% RF-DC conversion efficiency.
    """

    k: int = 10                      # total users
    groups: int = 5                  # NOMA groups (= time slots)
    users_per_group: int = 2
    cell_radius: float = 10.0        # m
    path_loss_exp: float = 2.0
    ref_distance: float = 1.0        # m
    ref_attenuation: float = 1e-3    # linear gain at ref_distance (-30 dB)
    noise_antenna: float = 1e-13     # sigma^2, W (antenna stage)
    noise_id: float = 1e-13          # sigma~^2, W (information-decoding stage)
    noise_eh: float = 1e-13          # sigma^^2, W (EH stage; carried, unused by the harvest model)
    eh_efficiency: float = 0.75      # RF-DC conversion efficiency, in [0, 1]
    frame_time: float = 1.0          # T, s
    min_rate: float = 0.1            # R_min, bit/Hz
    min_harvest: float = 1e-9        # P_min, W
    seed: int = 1

    def __post_init__(self):
        if self.k != self.groups * self.users_per_group:
            raise ValueError(
                f"k={self.k} must equal groups*users_per_group="
                f"{self.groups * self.users_per_group}"
            )
        if self.groups < 1 or self.users_per_group < 1:
            raise ValueError("groups and users_per_group must be >= 1")
        if self.path_loss_exp <= 0 or self.ref_distance <= 0:
            raise ValueError("path_loss_exp and ref_distance must be positive")
        if self.cell_radius < self.ref_distance:
            raise ValueError("cell_radius must be >= ref_distance")
        if self.ref_attenuation <= 0:
            raise ValueError("ref_attenuation must be positive")
        if not 0.0 <= self.eh_efficiency <= 1.0:
            raise ValueError("eh_efficiency must lie in [0, 1]")
        if min(self.noise_antenna, self.noise_id, self.noise_eh) <= 0:
            raise ValueError("noise variances must be positive")
        if self.frame_time <= 0:
            raise ValueError("frame_time must be positive")
        if self.min_rate < 0 or self.min_harvest < 0:
            raise ValueError("QoS targets must be non-negative")

    @property
    def slot_time(self) -> float:
        """Per-group slot length t_i = T / C."""
        return self.frame_time / self.groups

    @classmethod
    def from_db(cls, *, ref_attenuation_db=-30.0, noise_antenna_dbm=-100.0,
                noise_id_dbm=-100.0, noise_eh_dbm=-100.0,
                min_harvest_dbm=-60.0, **kwargs) -> "SystemConfig":
        """Build a config from decibel-scale inputs (the config-file units)."""
        return cls(
            ref_attenuation=db_to_linear(ref_attenuation_db),
            noise_antenna=dbm_to_watts(noise_antenna_dbm),
            noise_id=dbm_to_watts(noise_id_dbm),
            noise_eh=dbm_to_watts(noise_eh_dbm),
            min_harvest=dbm_to_watts(min_harvest_dbm),
            **kwargs,
        )


@dataclass(frozen=True)
class SystemInstance:
    """One channel realization.

    Users carry their original index 0..K-1.  ``grouping[i]`` lists the
    user ids of group i ordered by descending gain, so position j within a
    group is the NOMA order index (j = 0 is the strongest user).
    """

    distances: np.ndarray            # (K,) m
    gains: np.ndarray                # (K,) |h|^2, linear
    sorted_order: np.ndarray         # (K,) user ids, descending gain
    grouping: tuple                  # C tuples of user ids
    slot_time: float                 # t_i = T / C, s

    def group_gains(self, i: int) -> np.ndarray:
        """Gains of group i in NOMA order (non-increasing)."""
        return self.gains[list(self.grouping[i])]


def channel_gain(d: float, cfg: SystemConfig) -> float:
    """Path-loss power gain at distance d >= ref_distance."""
    if d < cfg.ref_distance:
        raise ValueError(f"distance {d} below reference distance {cfg.ref_distance}")
    return cfg.ref_attenuation / (d / cfg.ref_distance) ** cfg.path_loss_exp


def make_groups(sorted_users, n_groups: int, users_per_group: int) -> tuple:
    """Deal gain-ranked users into groups, widest channel-strength spread first.

    For pairs this is exactly the strongest-with-weakest rule
    {u_1, u_K}, {u_2, u_{K-1}}, ...; for other sizes the serpentine deal
    extends it (group 1 receives ranks 1, 2C, 2C+1, ...).  Within a group
    users stay in rank order, so position 0 is the strongest member.
    """
    sorted_users = list(sorted_users)
    if len(sorted_users) != n_groups * users_per_group:
        raise ValueError(
            f"{len(sorted_users)} users cannot fill {n_groups} groups of {users_per_group}"
        )
    groups = [[] for _ in range(n_groups)]
    for rnd in range(users_per_group):
        chunk = sorted_users[rnd * n_groups:(rnd + 1) * n_groups]
        order = range(n_groups) if rnd % 2 == 0 else reversed(range(n_groups))
        for g, u in zip(order, chunk):
            groups[g].append(u)
    return tuple(tuple(g) for g in groups)


def build_instance(cfg: SystemConfig, seed: int) -> SystemInstance:
    """Sample one realization: disk-uniform placement, path-loss gains, grouping.

    Placement is uniform over the disk area (radius = R * sqrt(u)); only the
    radial distance matters because gains depend on distance alone.
    Distances are clamped to ref_distance (far-field model).  Deterministic
    for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    r = cfg.cell_radius * np.sqrt(rng.random(cfg.k))
    distances = np.maximum(r, cfg.ref_distance)
    gains = cfg.ref_attenuation / (distances / cfg.ref_distance) ** cfg.path_loss_exp
    # stable sort on -gain: ties break toward the lower original index
    sorted_order = np.argsort(-gains, kind="stable")
    grouping = make_groups(sorted_order.tolist(), cfg.groups, cfg.users_per_group)
    return SystemInstance(
        distances=distances,
        gains=gains,
        sorted_order=sorted_order,
        grouping=grouping,
        slot_time=cfg.slot_time,
    )
