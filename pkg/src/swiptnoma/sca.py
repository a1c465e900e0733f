"""Successive convex approximation for the joint power / splitting design.

The original problem minimizes total transmit power subject to per-user
minimum-rate and minimum-harvested-power constraints, the SIC power
ordering, and splitting-ratio bounds.  Working directly in squared powers
P = p^2 makes the objective and the SIC ordering linear; the remaining
non-convexity sits in the bilinear products beta*P and in the quadratic
slack used to split each SINR requirement.

Per receiver m and decoded message d >= m (group-local order indices,
0 = strongest) the rate requirement is rewritten through slack variables

    alpha_(m,d)  ~ beta_m * P_d          (signal-product surrogate)
    chi_(m,d)^2  ~ interference + noise  (denominator surrogate)

and the chain    |h_m|^2 alpha_(m,d) >= (theta - 1) chi_(m,d)^2,
                 chi_(m,d)^2 >= |h_m|^2 sum_{s<d} (beta_m P_s)
                                + sigma^2 beta_m + sigma_id^2,

where theta = 2^(R_min / t_i) is the per-group SINR factor.  The rate
slack itself is pinned at R_min by this substitution (a larger theta only
tightens the chain while the objective pushes power down), which removes
the exponential constraint entirely.  Each outer iteration linearizes

    beta*P      by its first-order Taylor plane at the expansion point,
    chi^2       by its tangent 2 chi0 chi - chi0^2,

yielding a linear-constraint subproblem handed to the interior-point
solver.  Harvested power uses the same recipe via rho_(j,s) ~ (1-beta_j)P_s
and the per-user harvest surrogate varrho_j.  For interference terms whose
receiver is weaker than the message owner (s < m) no decoded-message slack
exists; the Taylor plane of beta_m P_s enters the row directly.

Expansion points stay exactly feasible for the original constraints: the
QP output is clipped to the splitting-ratio box, the SIC ordering is
re-imposed, and a minimal per-group uniform power up-scaling (1-D
bisection, factor 1 when nothing is violated) restores exact feasibility
before slacks are recomputed from the exact expressions.  Every linearized
constraint therefore holds with equality-or-slack at its own expansion
point, and any converged answer passes the exact-model check by
construction.

Subproblems are nondimensionalized before the solve (per-group power
scale, per-slack chi scales, sup-normalized rows); raw watt magnitudes
spanning 1e-13..1 would make absolute interior-point tolerances
meaningless.
"""

from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .metrics import BETA_EPS, DesignVariables, Tolerances, check_feasible, group_view
from .qpcore import QpProblem, check_kkt, solve_qp
from .sysmodel import SystemConfig, SystemInstance

_INIT_SALT = 1699        # rng stream separator for initialization draws
_RESTORE_GROWTH_CAP = 60  # doublings allowed when bracketing the restore scale


class InitializationError(RuntimeError):
    """No finite power scale makes the starting point feasible."""


def decode_pairs(ki: int):
    """(receiver, message) pairs with receiver <= message, row-major."""
    return [(m, d) for m in range(ki) for d in range(m, ki)]


@dataclass
class SubproblemState:
    """Full variable vector of one outer iteration plus its expansion point.

    ``vars`` holds the physical variables (P, beta) and doubles as the
    expansion point: slacks are recomputed from the exact expressions each
    time it changes, so linearizations are always taken about an exactly
    consistent point.
    """

    vars: DesignVariables
    chi: dict          # group -> (n_pairs,) sqrt of interference+noise
    alpha: dict        # group -> (n_pairs,) beta_m * P_d
    rho: dict          # group -> (ki, ki) (1-beta_j) * P_s
    varrho: dict       # group -> (ki,) exact harvested power
    rate_slack: np.ndarray   # (K,) exact rates (the theta-substitution pins the rate surrogate at R_min)
    theta_fixed: dict  # group -> 2^(R_min / t_i)
    groups: tuple      # group indices covered by this state


def _exact_slacks(vars: DesignVariables, instance: SystemInstance,
                  cfg: SystemConfig, groups):
    chi, alpha, rho, varrho = {}, {}, {}, {}
    rate_slack = np.zeros(len(vars.power))
    for g in groups:
        gv = group_view(instance, g)
        users = gv.users
        ki = gv.size
        pairs = decode_pairs(ki)
        a = np.zeros(len(pairs))
        x = np.zeros(len(pairs))
        for idx, (m, d) in enumerate(pairs):
            beta_m = vars.split[users[m]]
            a[idx] = beta_m * vars.power[users[d]]
            interference = 0.0
            for s in range(d):
                interference += vars.power[users[s]]
            x[idx] = np.sqrt(beta_m * gv.gains[m] * interference
                             + beta_m * cfg.noise_antenna + cfg.noise_id)
        r = np.zeros((ki, ki))
        for j in range(ki):
            for s in range(ki):
                r[j, s] = (1.0 - vars.split[users[j]]) * vars.power[users[s]]
        v = np.array([metrics.harvested_power(j, gv, vars, cfg) for j in range(ki)])
        for j, u in enumerate(users):
            rate_slack[u] = metrics.rate(j, gv, vars, cfg)
        chi[g], alpha[g], rho[g], varrho[g] = x, a, r, v
    return chi, alpha, rho, varrho, rate_slack


def _group_feasible_at_scale(scale, base_power, vars, instance, cfg, g) -> bool:
    """Exact rate and harvest checks with group powers scale*base_power."""
    gv = group_view(instance, g)
    users = list(gv.users)
    probe = vars.copy()
    probe.power[users] = scale * base_power
    for j in range(gv.size):
        if metrics.rate(j, gv, probe, cfg) < cfg.min_rate:
            return False
        if metrics.harvested_power(j, gv, probe, cfg) < cfg.min_harvest:
            return False
    return True


def _min_feasible_scale(base_power, vars, instance, cfg, g, lo=0.0):
    """Smallest c >= lo with exact feasibility at c*base_power, or None.

    Rates and harvested powers are monotone non-decreasing in a uniform
    group power scale (noise is fixed while signal and interference scale
    together), so bisection applies.  Returns the feasible upper end of the
    final bracket, so the caller lands on an exactly feasible point.
    """
    hi = max(lo, 1.0)
    if _group_feasible_at_scale(hi, base_power, vars, instance, cfg, g):
        if lo == hi:
            return hi
    else:
        for _ in range(_RESTORE_GROWTH_CAP):
            hi *= 2.0
            if _group_feasible_at_scale(hi, base_power, vars, instance, cfg, g):
                break
        else:
            return None
    lo_end = lo
    hi_end = hi
    for _ in range(120):
        mid = 0.5 * (lo_end + hi_end)
        if mid <= lo_end or mid >= hi_end:
            break
        if _group_feasible_at_scale(mid, base_power, vars, instance, cfg, g):
            hi_end = mid
        else:
            lo_end = mid
    return hi_end


def initialize(instance: SystemInstance, cfg: SystemConfig, groups=None,
               attempt: int = 0) -> SubproblemState:
    """Exactly feasible starting point: beta = 1/2, scaled random powers.

    Per group, a jittered geometric ramp (weakest user gets the most) is
    scaled by the smallest factor that meets every exact rate and harvest
    target; the ramp spread keeps interference-limited SINR ceilings well
    above the target so a finite scale always exists for finite targets.
    All slack values are then derived from the exact expressions with
    equality.
    """
    groups = tuple(range(len(instance.grouping))) if groups is None else tuple(groups)
    k = len(instance.gains)
    vars = DesignVariables(np.zeros(k), np.full(k, 0.5))
    theta = {}
    for g in groups:
        gv = group_view(instance, g)
        users = list(gv.users)
        ki = gv.size
        theta[g] = 2.0 ** (cfg.min_rate / gv.slot_time)
        if cfg.min_rate == 0.0 and cfg.min_harvest == 0.0:
            continue
        # seeded by group membership, not group position: permuting the
        # group list must not change any group's draw
        rng = np.random.default_rng([cfg.seed, _INIT_SALT, attempt, *sorted(users)])
        spread = max(4.0 * theta[g], 4.0)
        raw = spread ** np.arange(ki) * rng.uniform(0.9, 1.1, size=ki)
        scale = _min_feasible_scale(raw, vars, instance, cfg, g)
        if scale is None:
            raise InitializationError(
                f"group {g}: no finite power scale satisfies the QoS targets"
            )
        vars.power[users] = scale * raw
    chi, alpha, rho, varrho, rates = _exact_slacks(vars, instance, cfg, groups)
    return SubproblemState(vars=vars, chi=chi, alpha=alpha, rho=rho,
                           varrho=varrho, rate_slack=rates,
                           theta_fixed=theta, groups=groups)


@dataclass
class GroupLayout:
    group: int
    users: tuple
    pairs: list
    base: int
    ki: int
    power_scale: float
    chi_scale: np.ndarray
    varrho_scale: np.ndarray

    # variable offsets inside the group block
    def p(self, j):
        return self.base + j

    def beta(self, j):
        return self.base + self.ki + j

    def alpha(self, pair_idx):
        return self.base + 2 * self.ki + pair_idx

    def chi(self, pair_idx):
        return self.base + 2 * self.ki + len(self.pairs) + pair_idx

    def rho(self, j, s):
        return self.base + 2 * self.ki + 2 * len(self.pairs) + j * self.ki + s

    def varrho(self, j):
        return self.base + 2 * self.ki + 2 * len(self.pairs) + self.ki ** 2 + j

    @property
    def size(self):
        return 2 * self.ki + 2 * len(self.pairs) + self.ki ** 2 + self.ki


@dataclass
class SubproblemLayout:
    groups: list
    n: int
    obj_scale: float

    def extract(self, z: np.ndarray, out: DesignVariables) -> None:
        """Write the QP's physical variables (back in watts) into ``out``."""
        for gl in self.groups:
            for j, u in enumerate(gl.users):
                out.power[u] = gl.power_scale * z[gl.p(j)]
                out.split[u] = z[gl.beta(j)]


def build_subproblem(state: SubproblemState, instance: SystemInstance,
                     cfg: SystemConfig):
    """Emit the linear-constraint subproblem about the current expansion point.

    Returns the nondimensionalized problem plus the layout mapping QP
    variables back to watts.  Per group the rows are: one product
    linearization per (receiver, message) pair, the SINR chain pair rows,
    the harvest product rows, the per-user harvest aggregation rows, and
    the adjacent SIC ordering rows.
    """
    layouts = []
    base = 0
    for g in state.groups:
        gv = group_view(instance, g)
        pairs = decode_pairs(gv.size)
        p0 = state.vars.power[list(gv.users)]
        s_p = max(float(np.max(p0)), 1e-15)
        chi_scale = np.maximum(state.chi[g], np.sqrt(cfg.noise_id))
        varrho_scale = np.maximum.reduce(
            [state.varrho[g], np.full(gv.size, cfg.min_harvest), np.full(gv.size, 1e-18)]
        )
        gl = GroupLayout(group=g, users=gv.users, pairs=pairs, base=base,
                         ki=gv.size, power_scale=s_p, chi_scale=chi_scale,
                         varrho_scale=varrho_scale)
        layouts.append(gl)
        base += gl.size
    n = base
    obj_scale = max(gl.power_scale for gl in layouts)

    lin = np.zeros(n)
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    rows = []
    rhs = []

    def add_row(coefs: dict, b: float):
        row = np.zeros(n)
        for idx, v in coefs.items():
            row[idx] += v
        norm = np.max(np.abs(row))
        rows.append(row / norm)
        rhs.append(b / norm)

    for gl in layouts:
        g = gl.group
        users = list(gl.users)
        gains = instance.gains[users]
        p0 = state.vars.power[users]
        b0 = state.vars.split[users]
        chi0 = state.chi[g]
        theta = state.theta_fixed[g]
        s_p = gl.power_scale

        for j in range(gl.ki):
            lin[gl.p(j)] = s_p / obj_scale
            lb[gl.beta(j)] = BETA_EPS
            ub[gl.beta(j)] = 1.0 - BETA_EPS
            lb[gl.varrho(j)] = cfg.min_harvest / gl.varrho_scale[j]

        pair_index = {pair: idx for idx, pair in enumerate(gl.pairs)}
        for idx, (m, d) in enumerate(gl.pairs):
            h = gains[m]
            # product linearization: beta_m0*P_d + P_d0*beta_m - beta_m0*P_d0 >= alpha
            add_row({gl.p(d): -b0[m] * s_p,
                     gl.beta(m): -p0[d],
                     gl.alpha(idx): s_p},
                    -b0[m] * p0[d])
            # signal side of the SINR chain: |h|^2 alpha >= (theta-1) * tangent(chi^2)
            add_row({gl.alpha(idx): -h * s_p,
                     gl.chi(idx): 2.0 * (theta - 1.0) * chi0[idx] ** 2},
                    (theta - 1.0) * chi0[idx] ** 2)
            # denominator side: tangent(chi^2) >= interference + noise
            coefs = {gl.chi(idx): -2.0 * chi0[idx] ** 2}
            beta_coef = cfg.noise_antenna
            const = -cfg.noise_id - chi0[idx] ** 2
            for s in range(d):
                if s >= m:
                    coefs[gl.alpha(pair_index[(m, s)])] = coefs.get(
                        gl.alpha(pair_index[(m, s)]), 0.0) + h * s_p
                else:
                    # receiver weaker than the message owner: no decoded-message
                    # slack exists, the Taylor plane of beta_m * P_s enters directly
                    coefs[gl.p(s)] = coefs.get(gl.p(s), 0.0) + h * b0[m] * s_p
                    beta_coef += h * p0[s]
                    const += h * b0[m] * p0[s]
            coefs[gl.beta(m)] = coefs.get(gl.beta(m), 0.0) + beta_coef
            add_row(coefs, const)

        for j in range(gl.ki):
            for s in range(gl.ki):
                # harvest product linearization: (1-beta_j0)P_s - P_s0*beta_j + P_s0*beta_j0 >= rho
                add_row({gl.rho(j, s): s_p,
                         gl.p(s): -(1.0 - b0[j]) * s_p,
                         gl.beta(j): p0[s]},
                        p0[s] * b0[j])
            # eta |h_j|^2 sum_s rho >= varrho_j
            coefs = {gl.rho(j, s): -cfg.eh_efficiency * gains[j] * s_p
                     for s in range(gl.ki)}
            coefs[gl.varrho(j)] = gl.varrho_scale[j]
            add_row(coefs, 0.0)

        for j in range(gl.ki - 1):
            # SIC ordering in squared powers is already linear
            add_row({gl.p(j): 1.0, gl.p(j + 1): -1.0}, 0.0)

    problem = QpProblem(quad_diag=np.zeros(n), lin_coef=lin,
                        a=np.array(rows) if rows else np.zeros((0, n)),
                        b=np.array(rhs), lb=lb, ub=ub)
    return problem, SubproblemLayout(groups=layouts, n=n, obj_scale=obj_scale)


@dataclass
class SolveReport:
    """Outcome of one SCA run, certified against the exact model."""

    final_vars: DesignVariables
    objective_trace: list           # P_t per outer iteration, entry 0 = start
    violation_trace: list           # exact-model worst violation per iterate
    iterations: int                 # subproblems solved
    converged: bool
    feasibility: "metrics.FeasibilityReport"
    subproblem_statuses: list
    mu: float
    attempts: int
    failure: str | None = None      # 'initialization' | 'subproblem' | 'max_outer'

    @property
    def success(self) -> bool:
        return self.converged and self.feasibility.feasible

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _covered_power(vars: DesignVariables, instance: SystemInstance, groups) -> float:
    total = 0.0
    for g in groups:
        for u in instance.grouping[g]:
            total += vars.power[u]
    return float(total)


def _adopt(sol_z, layout, state, instance, cfg):
    """QP output -> next exactly feasible expansion point."""
    vars = state.vars
    layout.extract(sol_z, vars)
    for gl in layout.groups:
        users = list(gl.users)
        vars.split[users] = np.clip(vars.split[users], BETA_EPS, 1.0 - BETA_EPS)
        for j in range(1, gl.ki):
            if vars.power[users[j]] < vars.power[users[j - 1]]:
                vars.power[users[j]] = vars.power[users[j - 1]]
        base = vars.power[users].copy()
        if not _group_feasible_at_scale(1.0, base, vars, instance, cfg, gl.group):
            scale = _min_feasible_scale(base, vars, instance, cfg, gl.group, lo=1.0)
            if scale is not None:
                vars.power[users] = scale * base
    state.chi, state.alpha, state.rho, state.varrho, state.rate_slack = _exact_slacks(
        vars, instance, cfg, state.groups)


def sca_solve(instance: SystemInstance, cfg: SystemConfig, mu: float | None = None,
              max_outer: int = 50, qp_tol: float = 1e-8, qp_max_iter: int = 100,
              groups=None, tol: Tolerances = Tolerances()) -> SolveReport:
    """Run the outer loop until |P_t change| < mu, then re-verify exactly.

    mu defaults to 1e-6 * max(1 W, initial objective).  A subproblem
    failure triggers one restart from a fresh initialization seed; success
    requires convergence AND exact-model feasibility of the final point.
    """
    groups = tuple(range(len(instance.grouping))) if groups is None else tuple(groups)
    state = None
    trace = []
    viol_trace = []
    statuses = []
    converged = False
    failure = None
    attempts = 0
    mu_eff = mu if mu is not None else float("nan")

    for attempt in range(2):
        attempts = attempt + 1
        failure = None
        try:
            state = initialize(instance, cfg, groups, attempt)
        except InitializationError:
            failure = "initialization"
            continue
        trace = [_covered_power(state.vars, instance, groups)]
        viol_trace = [check_feasible(instance, state.vars, cfg, tol, groups).worst_violation()]
        statuses = []
        converged = False
        mu_eff = mu if mu is not None else 1e-6 * max(1.0, trace[0])
        for _ in range(max_outer):
            problem, layout = build_subproblem(state, instance, cfg)
            sol = solve_qp(problem, qp_tol, qp_max_iter)
            statuses.append(sol.status)
            if sol.status != "optimal":
                failure = "subproblem"
                break
            ok, _ = check_kkt(problem, sol, 100.0 * qp_tol)
            if not ok:
                failure = "subproblem"
                break
            _adopt(sol.z, layout, state, instance, cfg)
            trace.append(_covered_power(state.vars, instance, groups))
            viol_trace.append(
                check_feasible(instance, state.vars, cfg, tol, groups).worst_violation())
            if abs(trace[-1] - trace[-2]) < mu_eff:
                converged = True
                break
        else:
            failure = "max_outer"
        if failure != "subproblem" and failure != "initialization":
            break
        # an untrustworthy subproblem: retry once from a fresh random start

    if state is None:
        k = len(instance.gains)
        vars = DesignVariables(np.zeros(k), np.full(k, 0.5))
        feas = check_feasible(instance, vars, cfg, tol, groups)
        return SolveReport(final_vars=vars, objective_trace=[0.0], violation_trace=[
            feas.worst_violation()], iterations=0, converged=False,
            feasibility=feas, subproblem_statuses=[], mu=mu_eff,
            attempts=attempts, failure=failure)

    feas = check_feasible(instance, state.vars, cfg, tol, groups)
    return SolveReport(
        final_vars=state.vars,
        objective_trace=trace,
        violation_trace=viol_trace,
        iterations=len(statuses),
        converged=converged,
        feasibility=feas,
        subproblem_statuses=statuses,
        mu=mu_eff,
        attempts=attempts,
        failure=None if converged else failure,
    )


def solve_per_group(instance: SystemInstance, cfg: SystemConfig,
                    mu: float | None = None, max_outer: int = 50,
                    tol: Tolerances = Tolerances()) -> SolveReport:
    """Solve each group independently and concatenate.

    The objective and every constraint are group-local, so the joint
    problem separates exactly; totals match the joint solve within the
    convergence tolerance.  The per-group threshold is mu / C so the
    concatenated total meets the same overall criterion.
    """
    n_groups = len(instance.grouping)
    if mu is None:
        start = initialize(instance, cfg, attempt=0)
        mu = 1e-6 * max(1.0, metrics.total_transmit_power(start.vars))
    mu_g = mu / n_groups
    k = len(instance.gains)
    merged = DesignVariables(np.zeros(k), np.full(k, 0.5))
    traces = []
    viols = []
    statuses = []
    converged = True
    failure = None
    iterations = 0
    for g in range(n_groups):
        rep = sca_solve(instance, cfg, mu=mu_g, max_outer=max_outer,
                        groups=(g,), tol=tol)
        users = list(instance.grouping[g])
        merged.power[users] = rep.final_vars.power[users]
        merged.split[users] = rep.final_vars.split[users]
        traces.append(rep.objective_trace)
        viols.append(rep.violation_trace)
        statuses.extend(rep.subproblem_statuses)
        converged = converged and rep.converged
        iterations = max(iterations, rep.iterations)
        if rep.failure is not None and failure is None:
            failure = rep.failure
    depth = max(len(t) for t in traces)
    total_trace = [
        sum(t[min(i, len(t) - 1)] for t in traces) for i in range(depth)
    ]
    viol_trace = [
        max(v[min(i, len(v) - 1)] for v in viols) for i in range(depth)
    ]
    feas = check_feasible(instance, merged, cfg, tol)
    return SolveReport(
        final_vars=merged,
        objective_trace=total_trace,
        violation_trace=viol_trace,
        iterations=iterations,
        converged=converged,
        feasibility=feas,
        subproblem_statuses=statuses,
        mu=mu,
        attempts=1,
        failure=None if converged else failure,
    )
