import numpy as np
import pytest

from swiptnoma.metrics import (
    DesignVariables,
    GroupView,
    check_feasible,
    effective_sinr,
    group_view,
    harvested_power,
    rate,
    sinr_decode,
    total_transmit_power,
)
from swiptnoma.sysmodel import SystemConfig, SystemInstance, build_instance


def pair_group(g0=1e-3, g1=1e-5, slot=0.2):
    return GroupView(users=(0, 1), gains=np.array([g0, g1]), slot_time=slot)


def make_vars(power, split):
    return DesignVariables(np.asarray(power, float), np.asarray(split, float))


CFG = SystemConfig()


def test_sinr_decode_hand_value():
    # beta=0.5, |h|^2=1e-3, p^2=1e-9, both noises 1e-13: 5e-13 / 1.5e-13 = 10/3
    g = pair_group()
    v = make_vars([1e-9, 1e-9], [0.5, 0.5])
    assert sinr_decode(0, 0, g, v, CFG) == pytest.approx(10.0 / 3.0, rel=1e-12)


def test_sinr_decode_degenerate_cases():
    g = pair_group()
    v = make_vars([0.0, 1e-9], [0.5, 0.5])
    assert sinr_decode(0, 0, g, v, CFG) == 0.0      # zero-power message
    v2 = make_vars([1e-9, 1e-9], [0.0, 0.5])
    assert sinr_decode(0, 0, g, v2, CFG) == 0.0     # all signal routed to EH


def test_sinr_decode_rejects_bad_receiver():
    g = pair_group()
    v = make_vars([1e-9, 1e-9], [0.5, 0.5])
    with pytest.raises(ValueError):
        sinr_decode(1, 0, g, v, CFG)


def test_effective_sinr_single_element_min():
    g = pair_group()
    v = make_vars([1e-9, 2e-9], [0.5, 0.5])
    assert effective_sinr(0, g, v, CFG) == sinr_decode(0, 0, g, v, CFG)


def test_effective_sinr_weak_receiver_binds():
    # equal beta, h0 >= h1: the message-1 bottleneck is the weak user's own
    # SINR (the decode ratio grows with |h|^2), checked by brute force
    rng = np.random.default_rng(7)
    for _ in range(200):
        g0, g1 = sorted(rng.uniform(1e-5, 1e-3, size=2), reverse=True)
        beta = rng.uniform(0.05, 0.95)
        p = np.sort(rng.uniform(1e-10, 1e-6, size=2))
        g = pair_group(g0, g1)
        v = make_vars(p, [beta, beta])
        per_receiver = [sinr_decode(m, 1, g, v, CFG) for m in (0, 1)]
        assert effective_sinr(1, g, v, CFG) == min(per_receiver)
        assert per_receiver[1] <= per_receiver[0] + 1e-18


def test_effective_sinr_upper_bound():
    rng = np.random.default_rng(8)
    for _ in range(50):
        g = pair_group(*sorted(rng.uniform(1e-5, 1e-3, 2), reverse=True))
        v = make_vars(np.sort(rng.uniform(0, 1e-6, 2)), rng.uniform(0.1, 0.9, 2))
        for j in range(2):
            assert effective_sinr(j, g, v, CFG) <= sinr_decode(j, j, g, v, CFG) + 1e-18


def test_rate_hand_value():
    # effective SINR 10/3 over a 0.2 s slot: 0.2*log2(13/3) = 0.42310...
    g = pair_group()
    v = make_vars([1e-9, 0.0], [0.5, 0.5])
    expected = 0.2 * np.log2(1.0 + 10.0 / 3.0)
    assert rate(0, g, v, CFG) == pytest.approx(expected, rel=1e-12)
    assert rate(0, g, v, CFG) == pytest.approx(0.4231, abs=5e-5)


def test_rate_zero_and_time_scaling():
    g = pair_group()
    v = make_vars([0.0, 0.0], [0.5, 0.5])
    assert rate(0, g, v, CFG) == 0.0
    v2 = make_vars([1e-9, 2e-9], [0.5, 0.5])
    doubled = GroupView(users=(0, 1), gains=g.gains, slot_time=2 * g.slot_time)
    for j in range(2):
        assert rate(j, doubled, v2, CFG) == pytest.approx(2 * rate(j, g, v2, CFG), rel=1e-12)


def test_harvested_power_hand_value():
    # eta=0.75, beta=0.5, |h|^2=1e-5, sum p^2=2e-3 -> 7.5e-9 W
    g = pair_group(g0=1e-5, g1=1e-5)
    v = make_vars([1e-3, 1e-3], [0.5, 0.5])
    assert harvested_power(0, g, v, CFG) == pytest.approx(7.5e-9, rel=1e-12)
    v_id = make_vars([1e-3, 1e-3], [1.0, 1.0])
    assert harvested_power(0, g, v_id, CFG) == 0.0
    cfg0 = SystemConfig(eh_efficiency=0.0)
    assert harvested_power(0, g, v, cfg0) == 0.0


def test_harvested_power_linearity():
    g = pair_group()
    rng = np.random.default_rng(3)
    p = rng.uniform(1e-9, 1e-6, 2)
    v1 = make_vars(p, [0.25, 0.25])
    v2 = make_vars(3 * p, [0.25, 0.25])
    assert harvested_power(0, g, v2, CFG) == pytest.approx(3 * harvested_power(0, g, v1, CFG), rel=1e-12)
    v3 = make_vars(p, [0.625, 0.25])  # 1-beta halves: 0.75 -> 0.375
    assert harvested_power(0, g, v3, CFG) == pytest.approx(0.5 * harvested_power(0, g, v1, CFG), rel=1e-12)


def test_total_transmit_power():
    assert total_transmit_power(make_vars([0.0, 0.0], [0.5, 0.5])) == 0.0
    assert total_transmit_power(make_vars([1e-3, 1e-3], [0.1, 0.9])) == pytest.approx(2e-3)
    v = make_vars([1e-4, 2e-4, 3e-4, 4e-4], [0.5] * 4)
    w = make_vars([4e-4, 3e-4, 2e-4, 1e-4], [0.5] * 4)
    assert total_transmit_power(v) == total_transmit_power(w)


def test_effective_sinr_monotonicity():
    g = pair_group()
    base = make_vars([1e-9, 5e-9], [0.5, 0.5])
    s0 = effective_sinr(1, g, base, CFG)
    up = make_vars([1e-9, 6e-9], [0.5, 0.5])
    assert effective_sinr(1, g, up, CFG) >= s0
    noisy = make_vars([2e-9, 5e-9], [0.5, 0.5])
    assert effective_sinr(1, g, noisy, CFG) <= s0


def test_check_feasible_all_id_split_fails_harvest():
    cfg = SystemConfig(min_rate=0.0, min_harvest=1e-9)
    inst = build_instance(cfg, seed=0)
    v = make_vars(np.full(cfg.k, 1e-6), np.ones(cfg.k))
    rep = check_feasible(inst, v, cfg)
    assert not rep.feasible
    assert np.allclose(rep.harvest_slack, -cfg.min_harvest)


def test_check_feasible_degenerate_targets():
    cfg = SystemConfig(min_rate=0.0, min_harvest=0.0)
    inst = build_instance(cfg, seed=0)
    v = make_vars(np.zeros(cfg.k), np.full(cfg.k, 0.5))
    rep = check_feasible(inst, v, cfg)
    assert rep.feasible
    assert rep.worst_violation() == 0.0


def test_check_feasible_flags_sic_violation():
    cfg = SystemConfig(min_rate=0.0, min_harvest=0.0)
    inst = build_instance(cfg, seed=0)
    power = np.zeros(cfg.k)
    strong, weak = inst.grouping[0][0], inst.grouping[0][1]
    power[strong] = 2e-6
    power[weak] = 1e-6
    rep = check_feasible(inst, make_vars(power, np.full(cfg.k, 0.5)), cfg)
    assert not rep.feasible
    assert rep.sic_violation[0] == pytest.approx(1e-6)
