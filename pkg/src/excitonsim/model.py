"""Pigment network, bath parameters and the scalar bath functions.

The network and bath are plain immutable containers validated on
construction.  Sites are numbered 1..N; index 0 is reserved for the shared
electronic ground state throughout the package, so an N-site network lives
in an (N+1)-dimensional Hilbert space.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bessel import bessel_j0
from .units import (
    BOLTZMANN_CM1_PER_K,
    WAVENUMBER_TO_ANGULAR_PS,
    cm1_to_angular,
)

SECULAR_WEAK_COUPLING = "SecularWeakCoupling"
PURE_DEPHASING = "PureDephasing"
_BATH_MODELS = (SECULAR_WEAK_COUPLING, PURE_DEPHASING)


class ValidationError(ValueError):
    """Raised when a network/bath file violates its invariants.

    The message lists every violated invariant, not just the first.
    """


def _as_float_array(x, name, shape=None):
    arr = np.asarray(x, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValidationError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class SiteNetwork:
    """An N-site pigment network.

    Parameters
    ----------
    energies : (N,) array
        Site energies in cm^-1.
    couplings : (N, N) array
        Electronic couplings in cm^-1; symmetric, zero diagonal.
    positions : (N, 3) array, optional
        Site positions in Angstrom.  Used to derive the distance matrix
        unless an explicit one is given.
    distances : (N, N) array, optional
        Pairwise distances in Angstrom; overrides positions.
    dissipation_rates : (N,) array
        Radiative loss rate per site, ps^-1.
    trap_rates : (N,) array
        Reaction-centre trapping rate per site, ps^-1.
    labels : tuple of str, optional
    """

    energies: np.ndarray
    couplings: np.ndarray
    dissipation_rates: np.ndarray
    trap_rates: np.ndarray
    positions: np.ndarray | None = None
    distances: np.ndarray | None = None
    labels: tuple = ()

    def __post_init__(self):
        n = len(np.atleast_1d(self.energies))
        object.__setattr__(self, "energies", _as_float_array(self.energies, "energies", (n,)))
        object.__setattr__(self, "couplings", _as_float_array(self.couplings, "couplings", (n, n)))
        object.__setattr__(
            self, "dissipation_rates",
            _as_float_array(self.dissipation_rates, "dissipation_rates", (n,)))
        object.__setattr__(
            self, "trap_rates", _as_float_array(self.trap_rates, "trap_rates", (n,)))
        if self.positions is not None:
            object.__setattr__(self, "positions", _as_float_array(self.positions, "positions", (n, 3)))
        if self.distances is not None:
            object.__setattr__(self, "distances", _as_float_array(self.distances, "distances", (n, n)))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"site{m}" for m in range(1, n + 1)))
        self.validate()
        for arr in (self.energies, self.couplings, self.dissipation_rates,
                    self.trap_rates, self.positions, self.distances):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def n_sites(self):
        return len(self.energies)

    def validate(self):
        problems = []
        V = self.couplings
        n = self.n_sites
        for m in range(n):
            for k in range(m + 1, n):
                if V[m, k] != V[k, m]:
                    problems.append(
                        f"couplings not symmetric at sites ({m + 1},{k + 1}): "
                        f"{V[m, k]} vs {V[k, m]}")
        if np.any(np.diag(V) != 0.0):
            bad = [str(m + 1) for m in np.flatnonzero(np.diag(V))]
            problems.append("couplings diagonal must be zero at sites " + ", ".join(bad))
        if np.any(self.dissipation_rates < 0):
            problems.append("dissipation_rates must be >= 0")
        if np.any(self.trap_rates < 0):
            problems.append("trap_rates must be >= 0")
        if self.distances is not None:
            D = self.distances
            if not np.array_equal(D, D.T):
                problems.append("distance matrix must be symmetric")
            if np.any(np.diag(D) != 0.0):
                problems.append("distance matrix diagonal must be zero")
            if np.any(D < 0):
                problems.append("distances must be >= 0")
        if len(self.labels) != n:
            problems.append(f"expected {n} labels, got {len(self.labels)}")
        if problems:
            raise ValidationError("; ".join(problems))
        if not np.any(self.trap_rates > 0):
            warnings.warn("network has no trapping site; yields will be zero",
                          stacklevel=2)

    def distance_matrix(self):
        """Pairwise distance matrix in Angstrom.

        Explicit distances win over positions; with neither, all distinct
        sites are treated as infinitely separated (uncorrelated baths).
        """
        if self.distances is not None:
            return self.distances
        if self.positions is not None:
            diff = self.positions[:, None, :] - self.positions[None, :, :]
            return np.sqrt((diff ** 2).sum(axis=-1))
        d = np.full((self.n_sites, self.n_sites), np.inf)
        np.fill_diagonal(d, 0.0)
        return d


@dataclass(frozen=True)
class BathSpec:
    """Bath spectral-density and thermal parameters.

    ``correlation_length = 0`` encodes strictly uncorrelated site
    fluctuations (cross-rates vanish for distinct sites).
    """

    model: str = SECULAR_WEAK_COUPLING
    reorg_energy: float = 35.0  # cm^-1
    cutoff_freq: float = 150.0  # cm^-1
    temperature: float = 293.0  # K
    correlation_length: float = 0.0  # Angstrom
    dephasing_rate: float = 0.0  # ps^-1, PureDephasing only

    def __post_init__(self):
        problems = []
        if self.model not in _BATH_MODELS:
            problems.append(f"unknown bath model {self.model!r}; expected one of {_BATH_MODELS}")
        if self.reorg_energy < 0:
            problems.append("reorg_energy must be >= 0")
        if self.cutoff_freq <= 0:
            problems.append("cutoff_freq must be > 0")
        if self.temperature <= 0:
            problems.append("temperature must be > 0")
        if self.correlation_length < 0:
            problems.append("correlation_length must be >= 0")
        if self.dephasing_rate < 0:
            problems.append("dephasing_rate must be >= 0")
        if problems:
            raise ValidationError("; ".join(problems))


def build_hamiltonian(net: SiteNetwork) -> np.ndarray:
    """Exciton Hamiltonian on the ground + single-excitation space.

    Returns an (N+1) x (N+1) complex Hermitian matrix in rad/ps.  Row and
    column 0 belong to the ground state and are identically zero; entry
    (m, m) is the site energy and (m, n) the coupling, converted from cm^-1.
    """
    n = net.n_sites
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[1:, 1:] = cm1_to_angular(np.diag(net.energies) + net.couplings)
    return h


def spectral_density(omega_cm1, bath: BathSpec):
    """Ohmic spectral density J(w) = (E_r w / w_c) exp(-w / w_c), in cm^-1."""
    omega_cm1 = np.asarray(omega_cm1, dtype=float)
    if np.any(omega_cm1 < 0):
        raise ValueError("spectral_density requires omega >= 0; callers pass |omega|")
    w = omega_cm1 / bath.cutoff_freq
    return bath.reorg_energy * w * np.exp(-w)


def thermal_occupation(omega_rad_ps, temperature_K):
    """Bose occupation N(w) = 1/(exp(hbar w / kT) - 1), w in rad/ps.

    Negative w is the usual analytic continuation, N(-w) = -(N(w) + 1).
    """
    if np.any(np.asarray(omega_rad_ps) == 0):
        raise ValueError("thermal_occupation undefined at omega = 0")
    u = (omega_rad_ps / WAVENUMBER_TO_ANGULAR_PS) / (BOLTZMANN_CM1_PER_K * temperature_K)
    return 1.0 / np.expm1(u)


def bath_rate(omega_rad_ps, bath: BathSpec):
    """Single-site relaxation/dephasing rate gamma(w) in ps^-1.

    w > 0 (downward transition): 2 pi J(|w|) (N(w) + 1);
    w < 0 (upward transition):   2 pi J(|w|) N(|w|);
    w = 0: the analytic ohmic limit 2 pi E_r kT / w_c.

    The sign convention is w = (final-state energy defect) such that
    detailed balance gamma(-w) = gamma(w) exp(-w/kT) holds exactly and the
    dynamics thermalizes toward the lowest exciton.
    """
    omega = np.asarray(omega_rad_ps, dtype=float)
    scalar = omega.ndim == 0
    omega = np.atleast_1d(omega)

    w_cm1 = np.abs(omega) / WAVENUMBER_TO_ANGULAR_PS
    j_cm1 = spectral_density(w_cm1, bath)
    out = np.empty_like(omega)

    zero = omega == 0.0
    pos = omega > 0.0
    neg = omega < 0.0
    kt_cm1 = BOLTZMANN_CM1_PER_K * bath.temperature
    if np.any(zero):
        out[zero] = 2.0 * np.pi * bath.reorg_energy * kt_cm1 / bath.cutoff_freq \
            * WAVENUMBER_TO_ANGULAR_PS
    if np.any(pos):
        n_occ = 1.0 / np.expm1(w_cm1[pos] / kt_cm1)
        out[pos] = 2.0 * np.pi * j_cm1[pos] * (n_occ + 1.0) * WAVENUMBER_TO_ANGULAR_PS
    if np.any(neg):
        n_occ = 1.0 / np.expm1(w_cm1[neg] / kt_cm1)
        out[neg] = 2.0 * np.pi * j_cm1[neg] * n_occ * WAVENUMBER_TO_ANGULAR_PS

    return float(out[0]) if scalar else out


def spatial_correlation(distance, correlation_length):
    """Cross-rate factor J0(d / lambda_B).

    d = 0 gives 1 for any correlation length.  lambda_B = 0 is the strictly
    uncorrelated limit: 0 for every d > 0 (J0(d/0) is otherwise undefined,
    and the d > 0 limit of lambda_B -> 0+ vanishes).
    """
    d = np.asarray(distance, dtype=float)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    if correlation_length < 0:
        raise ValueError("correlation_length must be >= 0")
    out = np.zeros_like(d)
    if correlation_length == 0.0:
        out[d == 0.0] = 1.0
    else:
        finite = np.isfinite(d)
        out[finite] = bessel_j0(d[finite] / correlation_length)
    return float(out[0]) if scalar else out


def correlation_matrix(net: SiteNetwork, bath: BathSpec) -> np.ndarray:
    """Site-fluctuation correlation matrix C_mn = J0(d_mn / lambda_B)."""
    if bath.correlation_length == 0.0:
        return np.eye(net.n_sites)
    return spatial_correlation(net.distance_matrix(), bath.correlation_length)


# ---------------------------------------------------------------------------
# File ingestion.  Network files are JSON:
#   {"sites": [{"label", "energy_cm1", "position_angstrom", "gamma_per_ps",
#               "kappa_per_ps"}, ...],
#    "couplings_cm1": NxN,
#    "distances_angstrom": NxN (optional, overrides positions)}
# Bath files:
#   {"model", "reorg_energy_cm1", "cutoff_cm1", "temperature_K",
#    "correlation_length_angstrom", "dephasing_rate_per_ps"}
# ---------------------------------------------------------------------------

_SITE_KEYS = {"label", "energy_cm1", "position_angstrom", "gamma_per_ps", "kappa_per_ps"}


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc


def load_network(path) -> SiteNetwork:
    """Load and validate a network file."""
    doc = _read_json(path)
    if "sites" not in doc:
        raise ValidationError(f"{path}: missing 'sites'")
    sites = doc["sites"]
    for i, site in enumerate(sites):
        unknown = set(site) - _SITE_KEYS
        if unknown:
            raise ValidationError(
                f"{path}: sites[{i}] has unrecognized keys {sorted(unknown)}; "
                f"expected unit-tagged keys from {sorted(_SITE_KEYS)}")
        if "energy_cm1" not in site:
            raise ValidationError(f"{path}: sites[{i}] missing 'energy_cm1'")
    if "couplings_cm1" not in doc:
        raise ValidationError(f"{path}: missing 'couplings_cm1'")

    labels = tuple(s.get("label", f"site{i + 1}") for i, s in enumerate(sites))
    energies = [s["energy_cm1"] for s in sites]
    gammas = [s.get("gamma_per_ps", 0.0) for s in sites]
    kappas = [s.get("kappa_per_ps", 0.0) for s in sites]
    have_pos = [s.get("position_angstrom") for s in sites]
    positions = None
    if all(p is not None for p in have_pos):
        positions = np.asarray(have_pos, dtype=float)
    elif any(p is not None for p in have_pos):
        raise ValidationError(f"{path}: position_angstrom given for some sites but not all")
    distances = doc.get("distances_angstrom")
    if distances is not None:
        distances = np.asarray(distances, dtype=float)

    return SiteNetwork(
        energies=energies,
        couplings=doc["couplings_cm1"],
        dissipation_rates=gammas,
        trap_rates=kappas,
        positions=positions,
        distances=distances,
        labels=labels,
    )


_BATH_KEYS = {
    "model": "model",
    "reorg_energy_cm1": "reorg_energy",
    "cutoff_cm1": "cutoff_freq",
    "temperature_K": "temperature",
    "correlation_length_angstrom": "correlation_length",
    "dephasing_rate_per_ps": "dephasing_rate",
}


def load_bath(path) -> BathSpec:
    """Load and validate a bath file."""
    doc = _read_json(path)
    unknown = set(doc) - set(_BATH_KEYS) - {"notes", "provenance"}
    if unknown:
        raise ValidationError(
            f"{path}: unrecognized keys {sorted(unknown)}; "
            f"expected unit-tagged keys from {sorted(_BATH_KEYS)}")
    kwargs = {attr: doc[key] for key, attr in _BATH_KEYS.items() if key in doc}
    return BathSpec(**kwargs)
