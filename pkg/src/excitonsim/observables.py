"""Physical quantities: trapping flux, yields, tangles and their partition.

The pairwise tangle in the zero/single-excitation subspace is
tau_mn = 4 |rho_mn|^2 and the total entanglement is its sum over site
pairs.  Yields are time integrals against the trapping density
omega_RC(t) = sum_m kappa_m rho_mm(t).
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .generators import Liouvillian
from .model import SiteNetwork
from .propagator import Trajectory, integrated_state

HORIZON_WARNING_BOUND = 1e-3
YIELD_ORACLE_TOL = 1e-4
MIN_YIELD = 1e-12


def _normalize_pair(pair):
    m, n = pair
    m, n = int(m), int(n)
    if m == n:
        raise ValueError(f"pair ({m},{n}) repeats a site")
    return (m, n) if m < n else (n, m)


@dataclass(frozen=True)
class PairPartition:
    """Named grouping of unordered site pairs, disjoint and exhaustive."""
    groups: dict  # label -> tuple of (m, n) with m < n
    n_sites: int

    def __post_init__(self):
        cleaned = {}
        for label, pairs in self.groups.items():
            cleaned[str(label)] = tuple(sorted(_normalize_pair(p) for p in pairs))
        object.__setattr__(self, "groups", cleaned)
        self.validate()

    def validate(self):
        n = self.n_sites
        wanted = {(m, k) for m in range(1, n + 1) for k in range(m + 1, n + 1)}
        seen = {}
        problems = []
        for label, pairs in self.groups.items():
            for p in pairs:
                if p[0] < 1 or p[1] > n:
                    problems.append(f"pair {p} in group '{label}' outside 1..{n}")
                elif p in seen:
                    problems.append(f"pair {p} duplicated in groups '{seen[p]}' and '{label}'")
                else:
                    seen[p] = label
        missing = sorted(wanted - set(seen))
        if missing:
            problems.append(f"missing pairs: {missing}")
        if problems:
            raise ValueError("invalid partition: " + "; ".join(problems))

    @property
    def labels(self):
        return tuple(self.groups)


def load_partition(path, n_sites) -> PairPartition:
    """Load a partition file: JSON {"groups": {label: [[m, n], ...]}}."""
    with open(path) as fh:
        doc = json.load(fh)
    if "groups" not in doc:
        raise ValueError(f"{path}: missing 'groups'")
    return PairPartition(groups=doc["groups"], n_sites=n_sites)


def trapping_density(rho, net: SiteNetwork):
    """omega_RC = sum_m kappa_m rho_mm, in ps^-1."""
    diag = np.diagonal(rho)[1:].real
    return float(net.trap_rates @ diag)


def trapping_density_series(traj: Trajectory, net: SiteNetwork):
    pops = traj.populations()[:, 1:]
    return pops @ net.trap_rates


def truncation_bound(traj: Trajectory):
    """Excited population left at the end of the trajectory.

    The remaining yield cannot exceed it, so it bounds the quadrature
    truncation error of any omega_RC integral.
    """
    return float(traj.excited_population()[-1])


def quantum_yield(traj: Trajectory, net: SiteNetwork):
    """Trapped probability: composite Simpson of omega_RC over the grid."""
    bound = truncation_bound(traj)
    if bound > HORIZON_WARNING_BOUND:
        warnings.warn(
            f"horizon too short: {bound:.2e} excited population remains, "
            "yield is truncated by up to that amount", stacklevel=2)
    return float(simpson(trapping_density_series(traj, net), x=traj.times))


def quantum_yield_exact(liouv: Liouvillian, rho0, net: SiteNetwork):
    """Yield from the integrated-state linear solve (no time discretization)."""
    rho_bar = integrated_state(liouv, rho0)
    return trapping_density(rho_bar, net)


def pair_tangle(rho, m, n):
    """tau_mn = 4 |rho_mn|^2 for distinct sites m, n (1-based)."""
    rho = np.asarray(rho)
    n_sites = rho.shape[0] - 1
    if m == n:
        raise ValueError("pair tangle needs two distinct sites")
    if not (1 <= m <= n_sites and 1 <= n <= n_sites):
        raise ValueError(f"site pair ({m},{n}) outside 1..{n_sites}")
    return 4.0 * abs(rho[m, n]) ** 2


def total_entanglement(rho):
    """E_T = sum over site pairs of tau_mn."""
    block = np.asarray(rho)[1:, 1:]
    iu = np.triu_indices(block.shape[0], k=1)
    return 4.0 * float((np.abs(block[iu]) ** 2).sum())


def partitioned_entanglement(rho, part: PairPartition):
    """Group sums of the pairwise tangles; sums exactly to E_T."""
    rho = np.asarray(rho)
    return {label: 4.0 * float(sum(abs(rho[m, n]) ** 2 for m, n in pairs))
            for label, pairs in part.groups.items()}


def entanglement_series(traj: Trajectory, pairs=None):
    """E(t) over the trajectory; all site pairs unless a pair set is given."""
    if pairs is None:
        block = traj.states[:, 1:, 1:]
        iu = np.triu_indices(block.shape[1], k=1)
        return 4.0 * (np.abs(block[:, iu[0], iu[1]]) ** 2).sum(axis=1)
    pairs = [_normalize_pair(p) for p in pairs]
    if not pairs:
        return np.zeros(len(traj.times))
    ms, ns = zip(*pairs)
    return 4.0 * (np.abs(traj.states[:, ms, ns]) ** 2).sum(axis=1)


def entanglement_yield(traj: Trajectory, net: SiteNetwork, e_functional=None):
    """Average entanglement over the trapping waiting-time distribution.

    phi = integral of E(t) omega_RC(t) dt, normalized by the yield computed
    on the same grid with the same rule so grid error cancels in the ratio.
    e_functional may be a callable rho -> real, an iterable of site pairs,
    or None for the all-pairs total.
    """
    w = trapping_density_series(traj, net)
    eta = simpson(w, x=traj.times)
    if eta < MIN_YIELD:
        raise ValueError(
            f"yield {eta:.3e} is below {MIN_YIELD}; the waiting-time average "
            "is undefined")
    if e_functional is None:
        e = entanglement_series(traj)
    elif callable(e_functional):
        e = np.array([e_functional(rho) for rho in traj.states])
    else:
        e = entanglement_series(traj, pairs=e_functional)
    return float(simpson(e * w, x=traj.times) / eta)


def monogamy_check(rho, n):
    """Pure-state tangle balance for site n.

    Returns (lhs, rhs): lhs sums tau_nm over the other sites; rhs is the
    one-tangle 4 det of the reduced qubit state of site n.  For states in
    the zero/single-excitation subspace the two coincide.
    """
    rho = np.asarray(rho)
    n_sites = rho.shape[0] - 1
    if not 1 <= n <= n_sites:
        raise ValueError(f"site index {n} outside 1..{n_sites}")
    purity = float(np.trace(rho @ rho).real)
    if purity < 1.0 - 1e-8:
        raise ValueError(f"monogamy check requires a pure state (purity {purity:.6f})")
    others = [m for m in range(1, n_sites + 1) if m != n]
    lhs = 4.0 * float((np.abs(rho[n, others]) ** 2).sum())
    p = rho[n, n].real
    rhs = 4.0 * float(p * (1.0 - p) - abs(rho[0, n]) ** 2)
    return lhs, rhs


@dataclass(frozen=True)
class YieldReport:
    """Yields of one trajectory plus consistency diagnostics."""
    quantum_yield: float
    yield_oracle: float
    truncation_bound: float
    entanglement_yields: dict  # "total" plus one entry per partition group
    stats: dict = field(default_factory=dict)
    horizon_warning: bool = False

    def __post_init__(self):
        gap = abs(self.quantum_yield - self.yield_oracle)
        allowed = max(YIELD_ORACLE_TOL, self.truncation_bound)
        if gap > allowed:
            raise ValueError(
                f"quadrature yield {self.quantum_yield:.8f} and linear-solve yield "
                f"{self.yield_oracle:.8f} disagree by {gap:.3e} (allowed {allowed:.3e})")
        groups = [v for k, v in self.entanglement_yields.items() if k != "total"]
        if groups:
            total = self.entanglement_yields.get("total", 0.0)
            if abs(sum(groups) - total) > 1e-10:
                raise ValueError("partition entanglement yields do not sum to the total")

    def as_dict(self):
        return {
            "quantum_yield": self.quantum_yield,
            "yield_oracle": self.yield_oracle,
            "truncation_bound": self.truncation_bound,
            "entanglement_yields": dict(self.entanglement_yields),
            "horizon_warning": self.horizon_warning,
            "stats": dict(self.stats),
        }

    def to_json(self, indent=2):
        return json.dumps(self.as_dict(), indent=indent)


def compute_yield_report(traj: Trajectory, liouv: Liouvillian, net: SiteNetwork,
                         partition: PairPartition | None = None) -> YieldReport:
    """Quantum yield (both routes), total and per-group entanglement yields."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eta = quantum_yield(traj, net)
    bound = truncation_bound(traj)
    eta_exact = quantum_yield_exact(liouv, traj.states[0], net)
    phis = {"total": entanglement_yield(traj, net)}
    if partition is not None:
        for label, pairs in partition.groups.items():
            phis[label] = entanglement_yield(traj, net, pairs)
    return YieldReport(
        quantum_yield=eta,
        yield_oracle=eta_exact,
        truncation_bound=bound,
        entanglement_yields=phis,
        stats=dict(traj.stats),
        horizon_warning=bound > HORIZON_WARNING_BOUND,
    )


def export_observables_csv(traj: Trajectory, net: SiteNetwork,
                           partition: PairPartition, path):
    """Per-time table: time_ps, E_T, one column per group, omega_RC."""
    e_total = entanglement_series(traj)
    groups = {label: entanglement_series(traj, pairs)
              for label, pairs in partition.groups.items()}
    w = trapping_density_series(traj, net)
    header = ["time_ps", "E_T"] + [f"E_{label}" for label in groups] + ["omega_RC"]
    cols = [traj.times, e_total, *groups.values(), w]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join("%.12g" % v for v in row) + "\n")
