"""Parameter sweeps over bath knobs, result tables and crossing detection.

A sweep point is one (sweep value, initial site) pair: rebuild the bath and
Liouvillian, propagate a localized excitation, reduce to a YieldReport row.
Points are independent; a process pool sized by EXCITONSIM_WORKERS runs
them concurrently while rows are written in deterministic order.
"""

import csv
import hashlib
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .generators import build_liouvillian
from .model import SECULAR_WEAK_COUPLING, PURE_DEPHASING, load_bath, load_network
from .observables import compute_yield_report, export_observables_csv, load_partition
from .propagator import evolve, localized_state

SWEEP_VARIABLES = {
    "reorg": ("reorg_energy", SECULAR_WEAK_COUPLING),
    "dephasing": ("dephasing_rate", PURE_DEPHASING),
    "lambda": ("correlation_length", SECULAR_WEAK_COUPLING),
}

FLOAT_FMT = "%.12g"


def worker_count():
    try:
        return max(1, int(os.environ.get("EXCITONSIM_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SweepConfig:
    network_path: str
    bath_path: str
    partition_path: str
    out_dir: str
    initial_sites: tuple
    sweep_variable: str | None = None  # None = single time trace
    sweep_values: tuple = ()
    horizon: float | None = None
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = 0.005
    method: str = "expm"
    resume: bool = False

    def __post_init__(self):
        object.__setattr__(self, "initial_sites", tuple(int(s) for s in self.initial_sites))
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        problems = []
        if not self.initial_sites:
            problems.append("at least one initial site is required")
        if self.sweep_variable is not None:
            if self.sweep_variable not in SWEEP_VARIABLES:
                problems.append(f"unknown sweep variable {self.sweep_variable!r}; "
                                f"expected one of {sorted(SWEEP_VARIABLES)}")
            if not self.sweep_values:
                problems.append("sweep_values must be non-empty")
            elif any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
                problems.append("sweep_values must be strictly increasing")
        if problems:
            raise ValueError("; ".join(problems))


def load_inputs(cfg: SweepConfig):
    net = load_network(cfg.network_path)
    bath = load_bath(cfg.bath_path)
    partition = load_partition(cfg.partition_path, net.n_sites)
    for site in cfg.initial_sites:
        if not 1 <= site <= net.n_sites:
            raise ValueError(f"initial site {site} outside 1..{net.n_sites}")
    if cfg.sweep_variable is not None:
        _, wanted_model = SWEEP_VARIABLES[cfg.sweep_variable]
        if bath.model != wanted_model:
            raise ValueError(
                f"sweep variable {cfg.sweep_variable!r} requires bath model "
                f"{wanted_model}, got {bath.model}")
    return net, bath, partition


def bath_with(bath, variable, value):
    attr, _ = SWEEP_VARIABLES[variable]
    return replace(bath, **{attr: value})


def write_config_echo(cfg: SweepConfig, extra=None):
    """Freeze the resolved config and input-file hashes into the output dir."""
    doc = asdict(cfg)
    doc["input_hashes"] = {}
    for key in ("network_path", "bath_path", "partition_path"):
        path = getattr(cfg, key)
        with open(path, "rb") as fh:
            doc["input_hashes"][os.path.basename(path)] = hashlib.sha256(fh.read()).hexdigest()
    if extra:
        doc.update(extra)
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "config.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _simulate_point(net, bath, partition, site, cfg):
    liouv = build_liouvillian(net, bath)
    rho0 = localized_state(site, net.n_sites)
    traj = evolve(rho0, liouv, horizon=cfg.horizon, rtol=cfg.rtol, atol=cfg.atol,
                  max_step=cfg.max_step, method=cfg.method)
    return compute_yield_report(traj, liouv, net, partition)


def _point_task(args):
    net, bath, partition, cfg, value, site = args
    row = {"sweep_value": value, "initial_site": site}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            swept = bath if cfg.sweep_variable is None else \
                bath_with(bath, cfg.sweep_variable, value)
            report = _simulate_point(net, bath=swept, partition=partition,
                                     site=site, cfg=cfg)
        row["eta"] = report.quantum_yield
        row["eta_exact"] = report.yield_oracle
        for label, phi in report.entanglement_yields.items():
            row[f"phi_{label}"] = phi
        row["truncation_bound"] = report.truncation_bound
        row["status"] = "ok"
        row["detail"] = "; ".join(str(w.message) for w in caught)
    except Exception as exc:  # per-point failures recorded, sweep continues
        row["status"] = "failed"
        row["detail"] = f"{type(exc).__name__}: {exc}"
    return row


def _row_columns(partition):
    return (["sweep_value", "initial_site", "eta", "eta_exact", "phi_total"]
            + [f"phi_{label}" for label in partition.labels]
            + ["truncation_bound", "status", "detail"])


def _format_row(row, columns):
    out = {}
    for col in columns:
        v = row.get(col, "")
        if isinstance(v, float):
            v = FLOAT_FMT % v
        out[col] = v
    return out


def _read_existing(path):
    rows = {}
    with open(path) as fh:
        for rec in csv.DictReader(fh):
            rows[(rec["sweep_value"], int(rec["initial_site"]))] = rec
    return rows


def _task_key(value, site):
    # Keys are the formatted sweep value, so resume matching survives the
    # 12-digit CSV round trip.
    return (FLOAT_FMT % value, site)


def run_sweep(cfg: SweepConfig):
    """Run all sweep points and write results.csv; returns (rows, n_failed).

    Rows are ordered sweep-value-major then by initial site and written
    incrementally as points complete.  With --resume, points already marked
    ok in an existing results.csv are not recomputed.
    """
    net, bath, partition = load_inputs(cfg)
    if cfg.sweep_variable is None:
        raise ValueError("run_sweep needs a sweep variable; use run_time_trace")
    write_config_echo(cfg)
    out_path = os.path.join(cfg.out_dir, "results.csv")
    columns = _row_columns(partition)

    previous = {}
    if cfg.resume and os.path.exists(out_path):
        previous = {k: v for k, v in _read_existing(out_path).items()
                    if v.get("status") == "ok"}

    tasks = [(value, site) for value in cfg.sweep_values for site in cfg.initial_sites]
    todo = [(net, bath, partition, cfg, value, site)
            for value, site in tasks if _task_key(value, site) not in previous]

    def stream():
        workers = worker_count()
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                yield from pool.map(_point_task, todo)
        else:
            for args in todo:
                yield _point_task(args)

    fresh = stream()
    n_failed = 0
    rows = []
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for value, site in tasks:
            key = _task_key(value, site)
            row = previous[key] if key in previous else _format_row(next(fresh), columns)
            if row.get("status") != "ok":
                n_failed += 1
            writer.writerow(row)
            fh.flush()
            rows.append(row)
    return rows, n_failed


def run_time_trace(cfg: SweepConfig):
    """One trajectory per initial site; writes trace_site<m>.csv and a report."""
    net, bath, partition = load_inputs(cfg)
    write_config_echo(cfg)
    liouv = build_liouvillian(net, bath)
    for site in cfg.initial_sites:
        rho0 = localized_state(site, net.n_sites)
        traj = evolve(rho0, liouv, horizon=cfg.horizon, rtol=cfg.rtol,
                      atol=cfg.atol, max_step=cfg.max_step, method=cfg.method)
        export_observables_csv(
            traj, net, partition, os.path.join(cfg.out_dir, f"trace_site{site}.csv"))
        report = compute_yield_report(traj, liouv, net, partition)
        with open(os.path.join(cfg.out_dir, f"report_site{site}.json"), "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    return 0


IDENTICAL_CURVES = "identical"


def _difference_curve(rows, column):
    """Common grid x and curve difference (lower site minus higher site)."""
    by_site = {}
    for row in rows:
        if row.get("status", "ok") != "ok":
            continue
        site = int(row["initial_site"])
        by_site.setdefault(site, []).append(
            (float(row["sweep_value"]), float(row[column])))
    if len(by_site) != 2:
        raise ValueError(f"crossing detection needs exactly two initial sites, "
                         f"got {sorted(by_site)}")
    (_, pts1), (_, pts2) = sorted(by_site.items())
    pts1.sort()
    pts2.sort()
    if [p[0] for p in pts1] != [p[0] for p in pts2]:
        raise ValueError("initial sites were swept on different grids")
    x = np.array([p[0] for p in pts1])
    y1 = np.array([p[1] for p in pts1])
    y2 = np.array([p[1] for p in pts2])
    return x, y1 - y2, max(np.abs(np.concatenate([y1, y2])).max(), 1e-300)


def crossing_finder(rows, column):
    """Sweep values where the two initial-site curves of `column` intersect.

    Expects rows for exactly two initial sites on a common grid.  Returns
    (crossings, marker) with marker IDENTICAL_CURVES when the curves are
    degenerate everywhere, else None.  Crossings are linearly interpolated.
    """
    x, d, scale = _difference_curve(rows, column)
    if np.all(np.abs(d) <= 1e-12 * scale):
        return [], IDENTICAL_CURVES
    crossings = []
    for i in range(len(x) - 1):
        if d[i] == 0.0:
            crossings.append(float(x[i]))
        elif d[i] * d[i + 1] < 0.0:
            t = d[i] / (d[i] - d[i + 1])
            crossings.append(float(x[i] + t * (x[i + 1] - x[i])))
    if d[-1] == 0.0:
        crossings.append(float(x[-1]))
    return crossings, None


def crossing_brackets(rows, column):
    """Grid intervals (lo, hi) containing a strict sign change of `column`."""
    x, d, scale = _difference_curve(rows, column)
    if np.all(np.abs(d) <= 1e-12 * scale):
        return []
    return [(float(x[i]), float(x[i + 1]))
            for i in range(len(x) - 1) if d[i] * d[i + 1] < 0.0]


def refine_crossing(cfg: SweepConfig, column, lo, hi, n_iter=20):
    """Bisect a sign change of the two-site difference by re-running points."""
    net, bath, partition = load_inputs(cfg)
    s1, s2 = sorted(cfg.initial_sites)

    def diff(value):
        vals = {}
        for site in (s1, s2):
            row = _point_task((net, bath, partition, cfg, value, site))
            if row["status"] != "ok":
                raise RuntimeError(f"refinement point failed: {row['detail']}")
            vals[site] = row[column]
        return vals[s1] - vals[s2]

    d_lo, d_hi = diff(lo), diff(hi)
    if d_lo == 0.0:
        return lo
    if d_hi == 0.0:
        return hi
    if d_lo * d_hi > 0:
        raise ValueError(f"no sign change of {column} between {lo} and {hi}")
    for _ in range(n_iter):
        mid = np.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        d_mid = diff(mid)
        if d_mid == 0.0:
            return mid
        if d_lo * d_mid < 0:
            hi, d_hi = mid, d_mid
        else:
            lo, d_lo = mid, d_mid
    return np.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
