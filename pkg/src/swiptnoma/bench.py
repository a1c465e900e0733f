"""Monte Carlo benchmark harness: QoS sweeps, convergence traces, CSV output.

A sweep varies one QoS target (minimum harvested power or minimum rate)
over a value list, draws ``realizations`` placements per value from the
seed ladder base_seed + r (so inserting a sweep value never changes other
rows), solves each realization with the requested solvers, and aggregates
per (value, solver).  Solver failures are recorded, never fatal; means are
taken over the successful realizations with the success rate reported.

Outputs (all plain CSV, canonical ordering, stable float formatting):

    sweep.csv    sweep_param,sweep_value,solver,mean_pt_watts,mean_pt_dbm,
                 success_rate,mean_iterations,realizations
    detail.csv   sweep_param,sweep_value,realization,seed,solver,success,
                 pt_watts,iterations
    trace_<value>_<r>.csv     per-iteration trace of the iterative solver
    trace_pmin_<value>.csv    single-instance convergence traces
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .oracle import instance_reference
from .sca import sca_solve, solve_per_group
from .sysmodel import SystemConfig, build_instance
from .tdma import InfeasibleError, tdma_solve
from .units import watts_to_dbm

SWEEP_HEADER = ("sweep_param,sweep_value,solver,mean_pt_watts,mean_pt_dbm,"
                "success_rate,mean_iterations,realizations")
DETAIL_HEADER = ("sweep_param,sweep_value,realization,seed,solver,success,"
                 "pt_watts,iterations")
TRACE_HEADER = "iteration,pt_watts,qp_status,max_violation"

KNOWN_SOLVERS = ("sca-noma", "tdma", "oracle")


@dataclass(frozen=True)
class ExperimentPlan:
    base: SystemConfig
    sweep_param: str            # 'pmin' | 'rmin'
    sweep_values: tuple         # watts for pmin, bit/Hz for rmin; ascending
    realizations: int
    base_seed: int
    solvers: tuple

    def __post_init__(self):
        if self.sweep_param not in ("pmin", "rmin"):
            raise ValueError(f"unknown sweep parameter {self.sweep_param!r}")
        if not self.sweep_values:
            raise ValueError("sweep value list must be non-empty")
        if list(self.sweep_values) != sorted(self.sweep_values):
            raise ValueError("sweep values must be sorted ascending")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not self.solvers:
            raise ValueError("at least one solver required")
        for s in self.solvers:
            if s not in KNOWN_SOLVERS:
                raise ValueError(f"unknown solver {s!r}")


@dataclass
class SweepRow:
    sweep_param: str
    sweep_value: float
    solver: str
    mean_pt_watts: float        # over successful realizations; nan if none
    mean_pt_dbm: float
    success_rate: float
    mean_iterations: float
    realizations: int


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".12g")
    return str(x)


def _config_for(base: SystemConfig, param: str, value: float) -> SystemConfig:
    if param == "pmin":
        return replace(base, min_harvest=value)
    return replace(base, min_rate=value)


def _solve_one(instance, cfg, solver):
    """Returns (success, pt_watts, iterations, trace_rows_or_None)."""
    if solver == "sca-noma":
        rep = solve_per_group(instance, cfg)
        rows = [(i, rep.objective_trace[i],
                 "init" if i == 0 else rep.subproblem_statuses[min(i - 1, len(rep.subproblem_statuses) - 1)] if rep.subproblem_statuses else "init",
                 rep.violation_trace[i])
                for i in range(len(rep.objective_trace))]
        return rep.success, rep.objective, rep.iterations, rows
    if solver == "tdma":
        try:
            _, total = tdma_solve(instance, cfg)
        except InfeasibleError:
            return False, float("nan"), 0, None
        return True, total, 0, None
    if solver == "oracle":
        results, total = instance_reference(instance, cfg)
        ok = all(r.feasible for r in results)
        return ok, total if ok else float("nan"), 0, None
    raise ValueError(f"unknown solver {solver!r}")


def _trace_text(rows) -> str:
    lines = [TRACE_HEADER]
    for it, pt, status, viol in rows:
        lines.append(f"{it},{_fmt(float(pt))},{status},{_fmt(float(viol))}")
    return "\n".join(lines) + "\n"


def run_sweep(plan: ExperimentPlan, out_dir) -> list:
    """Execute the plan, write sweep.csv / detail.csv / traces, return rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    detail_lines = [DETAIL_HEADER]
    sweep_rows = []
    for value in plan.sweep_values:
        cfg = _config_for(plan.base, plan.sweep_param, value)
        per_solver = {s: [] for s in plan.solvers}
        for r in range(plan.realizations):
            seed = plan.base_seed + r
            instance = build_instance(cfg, seed)
            for solver in plan.solvers:
                success, pt, iters, trace = _solve_one(instance, cfg, solver)
                per_solver[solver].append((success, pt, iters))
                detail_lines.append(
                    f"{plan.sweep_param},{_fmt(value)},{r},{seed},{solver},"
                    f"{int(success)},{_fmt(pt)},{iters}")
                if solver == "sca-noma" and trace is not None:
                    path = out / f"trace_{_fmt(value)}_{r}.csv"
                    path.write_text(_trace_text(trace))
        for solver in plan.solvers:
            outcomes = per_solver[solver]
            wins = [(pt, it) for ok, pt, it in outcomes if ok]
            mean_pt = float(np.mean([w[0] for w in wins])) if wins else float("nan")
            mean_it = float(np.mean([w[1] for w in wins])) if wins else float("nan")
            sweep_rows.append(SweepRow(
                sweep_param=plan.sweep_param,
                sweep_value=value,
                solver=solver,
                mean_pt_watts=mean_pt,
                mean_pt_dbm=watts_to_dbm(mean_pt) if wins else float("nan"),
                success_rate=len(wins) / len(outcomes),
                mean_iterations=mean_it,
                realizations=plan.realizations,
            ))
    lines = [SWEEP_HEADER]
    for row in sweep_rows:
        lines.append(",".join([
            row.sweep_param, _fmt(row.sweep_value), row.solver,
            _fmt(row.mean_pt_watts), _fmt(row.mean_pt_dbm),
            _fmt(row.success_rate), _fmt(row.mean_iterations),
            str(row.realizations),
        ]))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    (out / "detail.csv").write_text("\n".join(detail_lines) + "\n")
    return sweep_rows


def run_convergence(cfg: SystemConfig, seed: int, values, out_dir) -> list:
    """Joint-solve convergence trace per minimum-harvest value, one instance."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for value in values:
        cfg_v = replace(cfg, min_harvest=value)
        instance = build_instance(cfg_v, seed)
        rep = sca_solve(instance, cfg_v)
        rows = [(i, rep.objective_trace[i],
                 "init" if i == 0 else rep.subproblem_statuses[i - 1],
                 rep.violation_trace[i])
                for i in range(len(rep.objective_trace))]
        (out / f"trace_pmin_{_fmt(value)}.csv").write_text(_trace_text(rows))
        reports.append(rep)
    return reports
