"""Sweep configuration, execution, resume, and crossing detection."""

import csv
import hashlib
import json
import os

import numpy as np
import pytest

from excitonsim import SweepConfig, crossing_finder, run_sweep, run_time_trace
from excitonsim import sweep as sweep_mod
from excitonsim.sweep import (
    IDENTICAL_CURVES,
    bath_with,
    crossing_brackets,
    load_inputs,
    refine_crossing,
    worker_count,
    write_config_echo,
)

from conftest import write_dimer_files


def dimer_config(paths, tmp_path, **kw):
    base = dict(network_path=paths["network"], bath_path=paths["bath"],
                partition_path=paths["partition"], out_dir=str(tmp_path / "out"),
                initial_sites=(1,), sweep_variable="reorg",
                sweep_values=(5.0, 20.0), horizon=40.0)
    base.update(kw)
    return SweepConfig(**base)


# ---------------------------------------------------------------------------
# Config and inputs
# ---------------------------------------------------------------------------

def test_sweep_config_validation(dimer_files, tmp_path):
    with pytest.raises(ValueError, match="at least one initial site"):
        dimer_config(dimer_files, tmp_path, initial_sites=())
    with pytest.raises(ValueError, match="unknown sweep variable"):
        dimer_config(dimer_files, tmp_path, sweep_variable="coupling")
    with pytest.raises(ValueError, match="non-empty"):
        dimer_config(dimer_files, tmp_path, sweep_values=())
    with pytest.raises(ValueError, match="strictly increasing"):
        dimer_config(dimer_files, tmp_path, sweep_values=(5.0, 5.0, 20.0))
    cfg = dimer_config(dimer_files, tmp_path, initial_sites=[1, 2],
                       sweep_values=[1, 2.5])
    assert cfg.initial_sites == (1, 2)
    assert cfg.sweep_values == (1.0, 2.5)


def test_load_inputs_checks_sites_and_model(dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path, initial_sites=(3,))
    with pytest.raises(ValueError, match="initial site 3 outside 1..2"):
        load_inputs(cfg)
    cfg2 = dimer_config(dimer_files, tmp_path, sweep_variable="dephasing",
                        sweep_values=(1.0, 2.0))
    with pytest.raises(ValueError, match="requires bath model"):
        load_inputs(cfg2)


def test_bath_with_replaces_one_knob(dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path)
    _, bath, _ = load_inputs(cfg)
    b2 = bath_with(bath, "reorg", 12.5)
    assert b2.reorg_energy == 12.5
    assert bath.reorg_energy == 35.0
    assert b2.model == bath.model
    assert bath_with(bath, "lambda", 9.0).correlation_length == 9.0
    assert bath_with(bath, "dephasing", 3.0).dephasing_rate == 3.0


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("EXCITONSIM_WORKERS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("EXCITONSIM_WORKERS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("EXCITONSIM_WORKERS", "0")
    assert worker_count() == 1
    monkeypatch.setenv("EXCITONSIM_WORKERS", "many")
    assert worker_count() == 1


def test_config_echo_hashes_inputs(dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path)
    write_config_echo(cfg, extra={"note": "test"})
    with open(os.path.join(cfg.out_dir, "config.json")) as fh:
        doc = json.load(fh)
    assert doc["note"] == "test"
    assert doc["sweep_variable"] == "reorg"
    with open(dimer_files["network"], "rb") as fh:
        want = hashlib.sha256(fh.read()).hexdigest()
    assert doc["input_hashes"]["network.json"] == want


# ---------------------------------------------------------------------------
# Running sweeps
# ---------------------------------------------------------------------------

def test_run_sweep_writes_deterministic_results(dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path)
    rows, n_failed = run_sweep(cfg)
    assert n_failed == 0
    assert [r["status"] for r in rows] == ["ok", "ok"]
    out = os.path.join(cfg.out_dir, "results.csv")
    with open(out) as fh:
        recs = list(csv.DictReader(fh))
    assert list(recs[0]) == ["sweep_value", "initial_site", "eta", "eta_exact",
                             "phi_total", "phi_all", "truncation_bound",
                             "status", "detail"]
    assert [r["sweep_value"] for r in recs] == ["5", "20"]
    for rec in recs:
        assert 0.0 < float(rec["eta"]) < 1.0
        assert abs(float(rec["eta"]) - float(rec["eta_exact"])) < 1e-4
    first = open(out, "rb").read()
    run_sweep(cfg)
    assert open(out, "rb").read() == first


def test_run_sweep_resume_skips_ok_rows(dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path, resume=True)
    run_sweep(cfg)
    out = os.path.join(cfg.out_dir, "results.csv")
    with open(out) as fh:
        recs = list(csv.DictReader(fh))
    # plant a sentinel in one finished row and break the other so it reruns
    recs[0]["eta"] = "0.123456"
    real_eta = recs[1]["eta"]
    recs[1]["status"] = "failed"
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(recs[0]))
        writer.writeheader()
        writer.writerows(recs)
    rows, n_failed = run_sweep(cfg)
    assert n_failed == 0
    assert rows[0]["eta"] == "0.123456"  # kept verbatim, not recomputed
    assert rows[1]["status"] == "ok"
    assert float(rows[1]["eta"]) == pytest.approx(float(real_eta), rel=1e-9)


def test_run_sweep_records_per_point_failures(dimer_files, tmp_path):
    # sweep the bath correlation length through a value where the pigment
    # geometry makes the correlated rate matrix indefinite; that point must
    # fail and be recorded without killing the rest of the sweep
    import excitonsim as xs
    net_path = xs.data_file("fmo_network.json")
    part_path = xs.data_file("fmo_partition.json")
    corr = xs.correlation_matrix(
        xs.load_network(net_path),
        xs.BathSpec(model="SecularWeakCoupling", correlation_length=5.0))
    assert np.linalg.eigvalsh(corr).min() < -1e-3  # genuinely indefinite
    cfg = SweepConfig(network_path=net_path, bath_path=dimer_files["bath"],
                      partition_path=part_path, out_dir=str(tmp_path / "o2"),
                      initial_sites=(1,), sweep_variable="lambda",
                      sweep_values=(2.0, 5.0), horizon=5.0)
    rows, n_failed = run_sweep(cfg)
    assert n_failed == 1
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"] == "failed"
    assert "PositivityError" in rows[1]["detail"]


def test_run_time_trace_outputs(dimer_files, tmp_path):
    cfg = SweepConfig(network_path=dimer_files["network"],
                      bath_path=dimer_files["bath"],
                      partition_path=dimer_files["partition"],
                      out_dir=str(tmp_path / "trace"),
                      initial_sites=(1,), horizon=2.0)
    run_time_trace(cfg)
    trace = os.path.join(cfg.out_dir, "trace_site1.csv")
    with open(trace) as fh:
        header = fh.readline().strip().split(",")
    assert header == ["time_ps", "E_T", "E_all", "omega_RC"]
    with open(os.path.join(cfg.out_dir, "report_site1.json")) as fh:
        report = json.load(fh)
    assert 0 < report["quantum_yield"] < 1
    assert os.path.exists(os.path.join(cfg.out_dir, "config.json"))


# ---------------------------------------------------------------------------
# Crossing detection
# ---------------------------------------------------------------------------

def synth_rows(x, y1, y2, column="eta"):
    rows = []
    for xi, a, b in zip(x, y1, y2):
        rows.append({"sweep_value": xi, "initial_site": 1, column: a, "status": "ok"})
        rows.append({"sweep_value": xi, "initial_site": 2, column: b, "status": "ok"})
    return rows


def test_crossing_finder_grid_node_and_interior():
    rows = synth_rows([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    crossings, marker = crossing_finder(rows, "eta")
    assert marker is None
    assert crossings == [1.0]
    rows2 = synth_rows([0.0, 1.0], [1.0, 3.0], [2.0, 0.0])
    crossings2, _ = crossing_finder(rows2, "eta")
    assert crossings2 == [pytest.approx(0.25)]


def test_crossing_finder_identical_curves():
    rows = synth_rows([0.0, 1.0], [0.4, 0.6], [0.4, 0.6])
    crossings, marker = crossing_finder(rows, "eta")
    assert crossings == []
    assert marker == IDENTICAL_CURVES


def test_crossing_finder_no_crossing_and_endpoint():
    rows = synth_rows([0.0, 1.0], [1.0, 2.0], [0.5, 0.6])
    assert crossing_finder(rows, "eta") == ([], None)
    rows2 = synth_rows([0.0, 1.0], [1.0, 2.0], [0.5, 2.0])
    crossings, _ = crossing_finder(rows2, "eta")
    assert crossings == [1.0]


def test_crossing_finder_ignores_failed_rows():
    rows = synth_rows([0.0, 1.0], [1.0, 2.0], [2.0, 1.0])
    rows.append({"sweep_value": 0.5, "initial_site": 1, "eta": 99.0,
                 "status": "failed"})
    crossings, _ = crossing_finder(rows, "eta")
    assert crossings == [pytest.approx(0.5)]


def test_crossing_finder_input_errors():
    rows = synth_rows([0.0, 1.0], [1.0, 2.0], [2.0, 1.0])
    rows.append({"sweep_value": 0.5, "initial_site": 3, "eta": 1.0,
                 "status": "ok"})
    with pytest.raises(ValueError, match="exactly two"):
        crossing_finder(rows, "eta")
    rows2 = synth_rows([0.0, 1.0], [1.0, 2.0], [2.0, 1.0])
    rows2[0]["sweep_value"] = -0.5  # site 1 now on a shifted grid
    with pytest.raises(ValueError, match="different grids"):
        crossing_finder(rows2, "eta")


def test_crossing_brackets_strict_sign_changes_only():
    rows = synth_rows([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert crossing_brackets(rows, "eta") == []  # touches zero at a node
    rows2 = synth_rows([0.0, 1.0, 2.0], [1.0, 2.5, 3.0], [3.0, 2.0, 1.0])
    assert crossing_brackets(rows2, "eta") == [(0.0, 1.0)]
    same = synth_rows([0.0, 1.0], [0.4, 0.6], [0.4, 0.6])
    assert crossing_brackets(same, "eta") == []


def test_refine_crossing_bisects_to_root(monkeypatch, dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path, initial_sites=(1, 2),
                       sweep_values=(0.1, 1.0))

    def fake_inputs(c):
        return None, None, None

    def fake_task(args):
        *_, value, site = args
        y = float(value) if site == 1 else 0.37
        return {"status": "ok", "eta": y}

    monkeypatch.setattr(sweep_mod, "load_inputs", fake_inputs)
    monkeypatch.setattr(sweep_mod, "_point_task", fake_task)
    root = refine_crossing(cfg, "eta", 0.1, 1.0)
    assert root == pytest.approx(0.37, rel=1e-4)
    with pytest.raises(ValueError, match="no sign change"):
        refine_crossing(cfg, "eta", 0.5, 1.0)


def test_refine_crossing_surfaces_point_failures(monkeypatch, dimer_files, tmp_path):
    cfg = dimer_config(dimer_files, tmp_path, initial_sites=(1, 2),
                       sweep_values=(0.1, 1.0))
    monkeypatch.setattr(sweep_mod, "load_inputs", lambda c: (None, None, None))
    monkeypatch.setattr(sweep_mod, "_point_task",
                        lambda args: {"status": "failed", "detail": "Boom: x"})
    with pytest.raises(RuntimeError, match="Boom"):
        refine_crossing(cfg, "eta", 0.1, 1.0)


def test_run_sweep_requires_sweep_variable(dimer_files, tmp_path):
    cfg = SweepConfig(network_path=dimer_files["network"],
                      bath_path=dimer_files["bath"],
                      partition_path=dimer_files["partition"],
                      out_dir=str(tmp_path / "o3"),
                      initial_sites=(1,), horizon=2.0)
    with pytest.raises(ValueError, match="sweep variable"):
        run_sweep(cfg)
