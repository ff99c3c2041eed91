"""Shared fixtures: random networks, tiny input files, acceptance reporting."""

import json

import numpy as np
import pytest

from excitonsim import BathSpec, SiteNetwork

# Filled in by test_acceptance.py; printed as a table after the run so every
# criterion gets its own pass/fail line regardless of capture settings.
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for entry in sorted(ACCEPTANCE_RESULTS, key=lambda e: e["num"]):
        status = "PASS" if entry["ok"] else "FAIL"
        tr.write_line(f"criterion {entry['num']:2d} [{status}] {entry['label']}: "
                      f"{entry['detail']}")


def random_network(rng, n_max=5, ensure_trap=True):
    """Random connected chain-plus-extras network with decay on every site.

    Dissipation rates are kept well above zero so trajectories drain within
    a few tens of ps, which keeps property sweeps fast while still exercising
    both loss channels.
    """
    n = int(rng.integers(2, n_max + 1))
    energies = rng.uniform(-150.0, 450.0, size=n)
    couplings = np.zeros((n, n))
    for i in range(n - 1):
        couplings[i, i + 1] = couplings[i + 1, i] = rng.uniform(-110.0, 110.0)
    extra = rng.integers(0, n)
    for _ in range(extra):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            v = rng.uniform(-40.0, 40.0)
            couplings[i, j] = couplings[j, i] = v
    gammas = rng.uniform(0.2, 0.5, size=n)
    kappas = np.zeros(n)
    if ensure_trap:
        kappas[rng.integers(0, n)] = rng.uniform(0.5, 2.0)
    return SiteNetwork(energies=energies, couplings=couplings,
                       dissipation_rates=gammas, trap_rates=kappas)


def random_bath(rng, model):
    if model == "SecularWeakCoupling":
        return BathSpec(model=model,
                        reorg_energy=float(rng.uniform(5.0, 60.0)),
                        cutoff_freq=float(rng.uniform(80.0, 250.0)),
                        temperature=float(rng.uniform(77.0, 330.0)))
    return BathSpec(model=model, reorg_energy=35.0, cutoff_freq=150.0,
                    temperature=293.0,
                    dephasing_rate=float(rng.uniform(0.5, 20.0)))


def write_dimer_files(tmp_path, kappa_site=2, gamma=0.05):
    """Small two-site input set for CLI and sweep tests. Returns path dict."""
    net = {
        "sites": [
            {"label": "a", "energy_cm1": 120.0, "gamma_per_ps": gamma,
             "kappa_per_ps": 1.0 if kappa_site == 1 else 0.0},
            {"label": "b", "energy_cm1": 0.0, "gamma_per_ps": gamma,
             "kappa_per_ps": 1.0 if kappa_site == 2 else 0.0},
        ],
        "couplings_cm1": [[0.0, -50.0], [-50.0, 0.0]],
    }
    bath = {"model": "SecularWeakCoupling", "reorg_energy_cm1": 35.0,
            "cutoff_cm1": 150.0, "temperature_K": 293.0,
            "correlation_length_angstrom": 0.0, "dephasing_rate_per_ps": 0.0}
    part = {"groups": {"all": [[1, 2]]}}
    paths = {}
    for name, doc in (("network", net), ("bath", bath), ("partition", part)):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc, indent=1))
        paths[name] = str(p)
    return paths


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


@pytest.fixture
def dimer_files(tmp_path):
    return write_dimer_files(tmp_path)
