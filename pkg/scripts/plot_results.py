#!/usr/bin/env python3
"""Plot sweep tables and time traces produced by the simulate CLI.

Reads the CSV files written by `simulate trace` or `simulate sweep` and
draws quick-look figures: yield and entanglement-yield curves per initial
site for sweeps, population/entanglement/trapping-flux panels for traces.

Usage:
    python3 scripts/plot_results.py sweep  RESULTS_DIR [--log-x] [--save FIG.png]
    python3 scripts/plot_results.py trace  RESULTS_DIR [--save FIG.png]
"""

import argparse
import csv
import os
import sys
from collections import defaultdict


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def plot_sweep(out_dir, log_x, save):
    import matplotlib.pyplot as plt

    rows = _read_csv(os.path.join(out_dir, "results.csv"))
    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        sys.exit("no successful sweep points in results.csv")
    phi_cols = [c for c in ok[0] if c.startswith("phi_")]
    by_site = defaultdict(list)
    for r in ok:
        by_site[int(r["initial_site"])].append(r)

    n_panels = 1 + len(phi_cols)
    fig, axes = plt.subplots(1, n_panels, figsize=(4 * n_panels, 3.2), squeeze=False)
    axes = axes[0]
    for site, rs in sorted(by_site.items()):
        rs.sort(key=lambda r: float(r["sweep_value"]))
        x = [float(r["sweep_value"]) for r in rs]
        axes[0].plot(x, [float(r["eta"]) for r in rs], marker=".", label=f"site {site}")
        for ax, col in zip(axes[1:], phi_cols):
            ax.plot(x, [float(r[col]) for r in rs], marker=".", label=f"site {site}")
    axes[0].set_ylabel("quantum yield")
    for ax, col in zip(axes[1:], phi_cols):
        ax.set_ylabel(col)
    for ax in axes:
        ax.set_xlabel("sweep value")
        if log_x:
            ax.set_xscale("log")
        ax.legend(fontsize=8)
    fig.tight_layout()
    if save:
        fig.savefig(save, dpi=150)
        print(f"saved {save}")
    else:
        plt.show()


def plot_trace(out_dir, save):
    import matplotlib.pyplot as plt

    traces = sorted(f for f in os.listdir(out_dir)
                    if f.startswith("trace_site") and f.endswith(".csv"))
    if not traces:
        sys.exit(f"no trace_site*.csv in {out_dir}")
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    for name in traces:
        rows = _read_csv(os.path.join(out_dir, name))
        t = [float(r["time_ps"]) for r in rows]
        label = name[len("trace_"):-len(".csv")]
        axes[0].plot(t, [float(r["E_T"]) for r in rows], label=label)
        axes[1].plot(t, [float(r["omega_RC"]) for r in rows], label=label)
    axes[0].set_ylabel("total entanglement")
    axes[1].set_ylabel("trapping flux (1/ps)")
    for ax in axes:
        ax.set_xlabel("time (ps)")
        ax.set_xscale("log")
        ax.legend(fontsize=8)
    fig.tight_layout()
    if save:
        fig.savefig(save, dpi=150)
        print(f"saved {save}")
    else:
        plt.show()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    p_sweep = sub.add_parser("sweep")
    p_sweep.add_argument("out_dir")
    p_sweep.add_argument("--log-x", action="store_true")
    p_sweep.add_argument("--save", default=None)
    p_trace = sub.add_parser("trace")
    p_trace.add_argument("out_dir")
    p_trace.add_argument("--save", default=None)
    args = parser.parse_args()
    if args.kind == "sweep":
        plot_sweep(args.out_dir, args.log_x, args.save)
    else:
        plot_trace(args.out_dir, args.save)


if __name__ == "__main__":
    main()
