"""Command-line driver.

    simulate trace  --network F --bath F --partition F --init 6 --out DIR
    simulate sweep  --network F --bath F --partition F --init 1,6 \
                    --var reorg --values 1,2,5,10 --out DIR [--resume]
    simulate crossings ... --init 1,6 --var reorg --out DIR [--refine-crossings]

Exit codes: 0 success, 1 any point failed, 2 bad configuration.
"""

import argparse
import csv
import os
import sys

import numpy as np

from .model import ValidationError
from .sweep import (
    FLOAT_FMT,
    IDENTICAL_CURVES,
    SweepConfig,
    crossing_brackets,
    crossing_finder,
    refine_crossing,
    run_sweep,
    run_time_trace,
)

DEFAULT_REORG_GRID = tuple(np.geomspace(1e-3, 50.0, 49))


def _add_common(p, needs_var):
    p.add_argument("--network", required=True, help="network JSON file")
    p.add_argument("--bath", required=True, help="bath JSON file")
    p.add_argument("--partition", required=True, help="pair-partition JSON file")
    p.add_argument("--init", required=True,
                   help="comma-separated initial sites, e.g. 1,6")
    p.add_argument("--out", required=True, help="output directory")
    if needs_var:
        p.add_argument("--var", required=True, choices=["reorg", "dephasing", "lambda"],
                       help="swept bath parameter")
        p.add_argument("--values", default=None,
                       help="comma-separated sweep values (cm^-1, ps^-1 or "
                            "Angstrom per --var); reorg defaults to a "
                            "log-spaced grid on [1e-3, 50]")
    p.add_argument("--horizon", type=float, default=None,
                   help="integration horizon in ps (default min(50/kappa_max, 20 ns))")
    p.add_argument("--max-step", type=float, default=0.005, help="sample spacing, ps")
    p.add_argument("--rtol", type=float, default=1e-9)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--method", choices=["rk45", "expm"], default=None,
                   help="integrator (default: rk45 for trace, expm for sweeps)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Single-excitation Lindblad dynamics: yields and "
                    "entanglement yields for pigment networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    trace = sub.add_parser("trace", help="time traces of entanglement and trapping flux")
    _add_common(trace, needs_var=False)

    sweep = sub.add_parser("sweep", help="yield table over a bath-parameter grid")
    _add_common(sweep, needs_var=True)
    sweep.add_argument("--resume", action="store_true",
                       help="recompute only failed points of an existing results.csv")

    cross = sub.add_parser("crossings",
                           help="sweep two initial sites and locate curve crossings")
    _add_common(cross, needs_var=True)
    cross.add_argument("--resume", action="store_true")
    cross.add_argument("--refine-crossings", action="store_true",
                       help="bisect each crossing with fresh simulations")
    return parser


def _parse_values(args):
    if getattr(args, "values", None):
        return tuple(float(v) for v in args.values.split(","))
    if getattr(args, "var", None) == "reorg":
        return DEFAULT_REORG_GRID
    if hasattr(args, "var"):
        raise ValueError(f"--values is required for --var {args.var}")
    return ()


def _config(args) -> SweepConfig:
    command = args.command
    return SweepConfig(
        network_path=args.network,
        bath_path=args.bath,
        partition_path=args.partition,
        out_dir=args.out,
        initial_sites=tuple(int(s) for s in args.init.split(",")),
        sweep_variable=None if command == "trace" else args.var,
        sweep_values=() if command == "trace" else _parse_values(args),
        horizon=args.horizon,
        rtol=args.rtol,
        atol=args.atol,
        max_step=args.max_step,
        method=args.method or ("rk45" if command == "trace" else "expm"),
        resume=getattr(args, "resume", False),
    )


def _write_crossings(cfg, rows, columns, refine):
    out_path = os.path.join(cfg.out_dir, "crossings.csv")
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "crossing_value", "refined_value", "note"])
        for column in columns:
            crossings, marker = crossing_finder(rows, column)
            if marker == IDENTICAL_CURVES:
                writer.writerow([column, "", "", IDENTICAL_CURVES])
                continue
            if not crossings:
                writer.writerow([column, "", "", "none"])
                continue
            brackets = crossing_brackets(rows, column)
            for k, value in enumerate(crossings):
                refined = ""
                if refine and k < len(brackets):
                    refined = FLOAT_FMT % refine_crossing(
                        cfg, column, brackets[k][0], brackets[k][1])
                writer.writerow([column, FLOAT_FMT % value, refined, ""])
    return out_path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "crossings" and len(cfg.initial_sites) != 2:
            raise ValueError("crossings needs exactly two initial sites")
    except (ValidationError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "trace":
            run_time_trace(cfg)
            print(f"wrote traces for sites {list(cfg.initial_sites)} to {cfg.out_dir}")
            return 0
        rows, n_failed = run_sweep(cfg)
        print(f"{len(rows)} points, {n_failed} failed -> "
              f"{os.path.join(cfg.out_dir, 'results.csv')}")
        if args.command == "crossings":
            yield_columns = [c for c in rows[0] if c.startswith(("eta", "phi_"))]
            path = _write_crossings(cfg, rows, yield_columns,
                                    refine=args.refine_crossings)
            print(f"crossings -> {path}")
        return 1 if n_failed else 0
    except (ValidationError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
