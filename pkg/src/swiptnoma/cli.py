"""Command-line surface: sweep, converge, and certify subcommands.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 certification failure.
"""

import argparse
import sys

from .bench import run_convergence, run_sweep
from .config import ConfigError, parse_config
from .oracle import certify
from .sca import sca_solve
from .sysmodel import build_instance
from .units import watts_to_dbm

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_CERTIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems map to exit code 1
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    sub.add_argument("--seed", type=int, help="shortcut for sweep.base_seed")
    sub.add_argument("--realizations", type=int,
                     help="shortcut for sweep.realizations")
    sub.add_argument("--solvers", help="shortcut for sweep.solvers (comma list)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="swiptnoma",
                     description="Hybrid TDMA-NOMA SWIPT power-minimization benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo QoS sweep to CSV")
    _add_common(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output directory")

    p_conv = sub.add_parser("converge", help="single-instance convergence traces")
    _add_common(p_conv)
    p_conv.add_argument("--out", required=True, help="output directory")

    p_cert = sub.add_parser("certify",
                            help="grid-search certification of the iterative solver")
    _add_common(p_cert)
    p_cert.add_argument("--slack", type=float, default=0.05,
                        help="relative agreement band (default 0.05)")
    return parser


def _plan_from_args(args):
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"sweep.base_seed={args.seed}")
    if args.realizations is not None:
        overrides.append(f"sweep.realizations={args.realizations}")
    if args.solvers is not None:
        overrides.append(f"sweep.solvers={args.solvers}")
    return parse_config(args.config, overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        plan = _plan_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "sweep":
        try:
            rows = run_sweep(plan, args.out)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        for row in rows:
            print(f"{row.sweep_param}={row.sweep_value:.6g} {row.solver}: "
                  f"mean P_t {row.mean_pt_watts:.6g} W "
                  f"({row.mean_pt_dbm:.2f} dBm), success {row.success_rate:.1%}")
        return EXIT_OK

    if args.command == "converge":
        if plan.sweep_param != "pmin":
            print("config error: converge expects a harvest-target sweep (sweep.axis=pmin)",
                  file=sys.stderr)
            return EXIT_CONFIG
        try:
            reports = run_convergence(plan.base, plan.base_seed,
                                      plan.sweep_values, args.out)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        for value, rep in zip(plan.sweep_values, reports):
            print(f"pmin={value:.6g} W: {rep.iterations} iterations, "
                  f"P_t {rep.objective:.6g} W, converged={rep.converged}")
        return EXIT_OK

    # certify: one instance at the base seed, per-group grid agreement
    instance = build_instance(plan.base, plan.base_seed)
    report = sca_solve(instance, plan.base)
    record = certify(instance, plan.base, report, slack=args.slack)
    for i, (o, s) in enumerate(zip(record.group_oracle, record.group_solver)):
        rel = (s - o) / o if o > 0 else 0.0
        print(f"group {i}: grid {o:.6g} W ({watts_to_dbm(o):.2f} dBm), "
              f"solver {s:.6g} W, rel {rel:+.2%}")
    print(f"solver feasible: {record.solver_feasible}, "
          f"grid feasible: {record.oracle_feasible}, passed: {record.passed}")
    return EXIT_OK if record.passed else EXIT_CERTIFY


if __name__ == "__main__":
    sys.exit(main())
