"""Command-line entry point: sweeps, validation suites and convergence traces."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import oracle
from .experiments import emit_convergence_trace, load_config, run_sweep


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the config's master seed")
    common.add_argument("--out-dir", default=None,
                        help="override the config's output directory")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel workers for sweep cells")
    common.add_argument("--tolerance-override", type=float, default=None,
                        help="override the conic solve tolerance")

    parser = argparse.ArgumentParser(
        prog="rsbeam", parents=[common],
        description="Secrecy-constrained rate-splitting precoder experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", parents=[common],
                           help="run a sweep config and write result tables")
    sweep.add_argument("config", help="path to the sweep config file")

    sub.add_parser("validate", parents=[common],
                   help="run the surrogate and identity oracle suites")

    trace = sub.add_parser("trace", parents=[common],
                           help="emit convergence traces for a config")
    trace.add_argument("config", help="path to the trace config file")
    return parser


def _apply_overrides(config, args):
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.tolerance_override is not None:
        updates["solve_tolerance"] = args.tolerance_override
    if updates:
        config = dataclasses.replace(config, **updates)
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "sweep":
        config = _apply_overrides(load_config(args.config), args)
        rows = run_sweep(config, out_dir=args.out_dir, jobs=args.jobs,
                         config_path=args.config)
        failures = sum(1 for r in rows if r.error)
        print(f"{len(rows)} rows written to "
              f"{args.out_dir or config.out_dir} ({failures} solver failures)")
        return 0
    if args.command == "validate":
        taylor = oracle.check_taylor_bounds()
        print(taylor.summary())
        identity = oracle.check_rate_wmmse()
        print(identity.summary())
        hard_failures = (
            taylor.exp_tangent_max_violation > 1e-12
            or taylor.ratio_tangent_max_violation > 1e-12
            or taylor.wmse_tangent_max_violation > 1e-9
            or identity.max_identity_residual > 1e-9
            or identity.equalizer_probe_violations
            or identity.weight_probe_violations)
        print("validation:", "FAIL" if hard_failures else "PASS")
        return 1 if hard_failures else 0
    if args.command == "trace":
        config = _apply_overrides(load_config(args.config), args)
        path = emit_convergence_trace(config, out_dir=args.out_dir,
                                      config_path=args.config)
        print(f"trace written to {path}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
