import numpy as np
import pytest
from dataclasses import replace

from swiptnoma.oracle import GridSpec, group_grid_search
from swiptnoma.sysmodel import SystemConfig, build_instance
from swiptnoma.tdma import InfeasibleError, tdma_solve, tdma_user_solve, _harvest_power, _rate_power


def test_rate_endpoint_limit():
    # Pmin=0, Rmin=0.1, slot 0.1 s, |h|^2=1e-3: (2^1 - 1)(2e-13)/1e-3 = 2e-10 W
    cfg = SystemConfig(min_rate=0.1, min_harvest=0.0)
    sol = tdma_user_solve(1e-3, cfg)
    assert sol.power == pytest.approx(2e-10, rel=1e-6)
    assert sol.split == 1.0
    assert sol.binding == "rate"


def test_harvest_endpoint_limit():
    # Rmin=0, Pmin=7.5e-9, eta=0.75, |h|^2=1e-5: 7.5e-9/(0.75e-5) = 1e-3 W
    cfg = SystemConfig(min_rate=0.0, min_harvest=7.5e-9)
    sol = tdma_user_solve(1e-5, cfg)
    assert sol.power == pytest.approx(1e-3, rel=1e-6)
    assert sol.split == 0.0
    assert sol.binding == "harvest"


def test_zero_targets():
    cfg = SystemConfig(min_rate=0.0, min_harvest=0.0)
    sol = tdma_user_solve(1e-4, cfg)
    assert sol.power == 0.0
    assert sol.binding == "both"


def test_bound_monotonicity_and_crossing():
    cfg = SystemConfig(min_rate=0.2, min_harvest=5e-9)
    gain = 3e-5
    slot = cfg.frame_time / cfg.k
    betas = np.linspace(0.01, 0.99, 40)
    a = [_rate_power(b, gain, cfg, slot) for b in betas]
    h = [_harvest_power(b, gain, cfg) for b in betas]
    assert all(x > y for x, y in zip(a, a[1:]))       # rate bound decreasing
    assert all(x < y for x, y in zip(h, h[1:]))       # harvest bound increasing
    sol = tdma_user_solve(gain, cfg)
    ra = _rate_power(sol.split, gain, cfg, slot)
    rb = _harvest_power(sol.split, gain, cfg)
    assert abs(ra - rb) <= 1e-9 * max(ra, rb)
    assert sol.binding == "both"


def test_solution_meets_exact_targets():
    rng = np.random.default_rng(11)
    for _ in range(50):
        gain = rng.uniform(1e-5, 1e-3)
        cfg = SystemConfig(min_rate=rng.uniform(0.0, 0.5),
                           min_harvest=rng.uniform(0.0, 1e-7))
        sol = tdma_user_solve(gain, cfg)
        slot = cfg.frame_time / cfg.k
        beta = sol.split
        sinr = beta * gain * sol.power / (beta * cfg.noise_antenna + cfg.noise_id)
        achieved_rate = slot * np.log2(1.0 + sinr)
        harvested = cfg.eh_efficiency * (1.0 - beta) * gain * sol.power
        assert achieved_rate >= cfg.min_rate - 1e-9
        assert harvested >= cfg.min_harvest - 1e-6 * max(cfg.min_harvest, 1e-9)


def random_crossing_case(rng, cfg0):
    """Random (gain, R_min, P_min) whose bound crossing sits at a known beta.

    Drawing beta* first and deriving P_min from B(beta*) = A(beta*) keeps the
    optimum inside the uniform beta grid's resolvable range and provides an
    analytic reference point for free.
    """
    gain = rng.uniform(1e-5, 1e-3)
    min_rate = rng.uniform(0.01, 0.5)
    beta_star = rng.uniform(0.05, 0.95)
    cfg = replace(cfg0, min_rate=min_rate, min_harvest=0.0)
    slot = cfg.frame_time / cfg.k
    p_star = _rate_power(beta_star, gain, cfg, slot)
    min_harvest = cfg.eh_efficiency * (1.0 - beta_star) * gain * p_star
    return gain, replace(cfg, min_harvest=min_harvest), beta_star, p_star


def test_matches_grid_search():
    # independence: the 2-D reference enumerates a singleton group with the
    # TDMA slot; the bisection solve never touches that code path
    rng = np.random.default_rng(4)
    spec = GridSpec(beta_min=1e-9, beta_max=1.0 - 1e-9, refine_rounds=4)
    cfg0 = SystemConfig()
    for _ in range(25):
        gain, cfg, beta_star, p_star = random_crossing_case(rng, cfg0)
        sol = tdma_user_solve(gain, cfg)
        assert sol.split == pytest.approx(beta_star, rel=1e-6)
        assert sol.power == pytest.approx(p_star, rel=1e-6)
        ref = group_grid_search(np.array([gain]), cfg, spec,
                                slot_time=cfg.frame_time / cfg.k)
        assert ref.feasible
        assert ref.objective >= sol.power * (1.0 - 1e-9)
        assert ref.objective <= sol.power * 1.02


def test_total_decouples_and_permutation_invariance():
    cfg = SystemConfig()
    inst = build_instance(cfg, seed=5)
    sols, total = tdma_solve(inst, cfg)
    assert total == pytest.approx(sum(s.power for s in sols), rel=1e-15)
    perm_total = float(sum(tdma_user_solve(g, cfg).power for g in inst.gains[::-1]))
    assert perm_total == pytest.approx(total, rel=1e-12)


def test_single_user_system_equals_user_solve():
    cfg = SystemConfig(k=1, groups=1, users_per_group=1)
    inst = build_instance(cfg, seed=2)
    sols, total = tdma_solve(inst, cfg)
    assert total == tdma_user_solve(float(inst.gains[0]), cfg).power


def test_total_monotone_in_targets():
    cfg = SystemConfig()
    inst = build_instance(cfg, seed=9)
    _, base = tdma_solve(inst, cfg)
    _, rate_up = tdma_solve(inst, replace(cfg, min_rate=2 * cfg.min_rate))
    _, harv_up = tdma_solve(inst, replace(cfg, min_harvest=2 * cfg.min_harvest))
    assert rate_up >= base
    assert harv_up >= base


def test_infeasible_configurations():
    with pytest.raises(InfeasibleError):
        tdma_user_solve(1e-4, SystemConfig(min_harvest=1e-9, eh_efficiency=0.0))
    with pytest.raises(InfeasibleError):
        tdma_user_solve(0.0, SystemConfig(min_rate=0.1))


def test_sca_parity_path():
    cfg = SystemConfig(k=4, groups=2, users_per_group=2,
                       min_rate=0.05, min_harvest=1e-9)
    inst = build_instance(cfg, seed=3)
    _, exact_total = tdma_solve(inst, cfg)
    _, sca_total = tdma_solve(inst, cfg, method="sca")
    assert sca_total == pytest.approx(exact_total, rel=2e-2)
    assert sca_total >= exact_total * (1.0 - 1e-6)  # exact solve is the optimum
