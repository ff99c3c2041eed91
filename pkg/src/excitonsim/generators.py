"""Dissipators and the Liouvillian superoperator.

Implements the secular weak-coupling generator (relaxation/dephasing among
excitons with spatially correlated rates), the site-basis pure-dephasing
generator, the loss/trapping channels, and their assembly into a matrix
acting on column-vectorized density matrices:

    vec(A rho B) = (B^T kron A) vec(rho),  vec = column stacking.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import model
from .model import BathSpec, SiteNetwork, bath_rate, correlation_matrix
from .units import cm1_to_angular

# Channel tags
RELAXATION = "Relaxation"
SITE_DEPHASING = "SiteDephasing"
DISSIPATION = "Dissipation"
TRAPPING = "Trapping"

BIN_TOLERANCE_RAD_PS = cm1_to_angular(1e-6)


class PositivityError(ValueError):
    """A correlated rate matrix has a genuinely negative eigenvalue."""


def _fix_column_signs(vectors, tol=1e-12):
    """Make the first significant component of each column positive real."""
    out = np.array(vectors)
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > tol * np.abs(col).max())
        if idx.size:
            pivot = col[idx[0]]
            out[:, k] = col * (np.conj(pivot) / np.abs(pivot))
    return out


@dataclass(frozen=True)
class FrequencyBin:
    """Transitions sharing one Bohr frequency.

    ``omega = e_from - e_to`` (rad/ps); positive omega is a downward jump.
    ``pairs`` holds ordered (from_exciton, to_exciton) index pairs.
    """
    omega: float
    pairs: tuple


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition of the single-excitation block.

    ``vectors[m, k]`` is the amplitude of site m+1 in exciton k, so columns
    are excitons; the matrix is unitary.
    """
    energies: np.ndarray  # (N,), rad/ps, ascending
    vectors: np.ndarray  # (N, N)
    bins: tuple  # of FrequencyBin

    @property
    def n_sites(self):
        return len(self.energies)


def diagonalize_single_excitation(H) -> EigenSystem:
    """Diagonalize the excited block of an (N+1)x(N+1) Hamiltonian.

    Ordering is deterministic: ascending eigenvalue, eigenvector signs fixed
    so the first significant component is positive real, exact-degeneracy
    ties broken lexicographically by eigenvector.
    """
    H = np.asarray(H, dtype=complex)
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ValueError("Hamiltonian must be hermitian")
    if np.any(H[0, :] != 0) or np.any(H[:, 0] != 0):
        raise ValueError("ground row/column of the Hamiltonian must be zero")

    block = H[1:, 1:]
    vals, vecs = np.linalg.eigh(block)
    vecs = _fix_column_signs(vecs)

    # Resolve exact degeneracies deterministically.
    order = list(range(len(vals)))
    order.sort(key=lambda k: (vals[k],) + tuple(np.round(vecs[:, k].real, 12)))
    vals = vals[order]
    vecs = vecs[:, order]

    n = len(vals)
    omegas = {}
    for a in range(n):
        for b in range(n):
            w = vals[a] - vals[b]
            for key in omegas:
                if abs(w - key) < BIN_TOLERANCE_RAD_PS:
                    omegas[key].append((a, b))
                    break
            else:
                omegas[w] = [(a, b)]
    bins = tuple(
        FrequencyBin(omega=w, pairs=tuple(sorted(prs)))
        for w, prs in sorted(omegas.items()))
    return EigenSystem(energies=vals, vectors=vecs, bins=bins)


def site_transition_operators(es: EigenSystem, freq_bin: FrequencyBin) -> np.ndarray:
    """Stack of per-site jump operators A_m(omega) on the full space.

    A_m(omega) sums c_m*(to) c_m(from) |to><from| over the bin's transition
    pairs, expressed in the site basis with the ground row/column zero.
    """
    U = es.vectors
    n = es.n_sites
    ops = np.zeros((n, n + 1, n + 1), dtype=complex)
    for a, b in freq_bin.pairs:  # a = from, b = to
        outer = np.outer(U[:, b], U[:, a].conj())
        coeff = U[:, b].conj() * U[:, a]
        ops[:, 1:, 1:] += coeff[:, None, None] * outer[None, :, :]
    return ops


@dataclass(frozen=True)
class JumpChannel:
    """One Lindblad channel: rate, operator and an audit tag."""
    operator: np.ndarray
    rate: float  # ps^-1
    tag: str
    omega: float | None = None  # rad/ps, Relaxation only
    site: int | None = None  # 1-based, site-attached channels only

    def __post_init__(self):
        if self.rate < 0:
            raise PositivityError(f"negative channel rate {self.rate} ({self.tag})")
        op = np.asarray(self.operator, dtype=complex)
        op.flags.writeable = False
        object.__setattr__(self, "operator", op)

    def summary(self):
        entry = {
            "tag": self.tag,
            "rate_per_ps": self.rate,
            "operator_norm": float(np.linalg.norm(self.operator)),
        }
        if self.omega is not None:
            entry["omega_rad_ps"] = self.omega
        if self.site is not None:
            entry["site"] = self.site
        return entry


def build_secular_generator(es: EigenSystem, net: SiteNetwork, bath: BathSpec):
    """Relaxation/dephasing channels of the secular weak-coupling model.

    Per frequency bin the site rate matrix G_mn = C_mn * gamma(omega)
    (C the spatial correlation matrix) is diagonalized; each eigenpair
    (g_k, u_k) yields an independent channel sum_m u_k(m) A_m(omega) at
    rate g_k.  Marginally negative eigenvalues within 1e-10 * max|G| are
    clamped to zero (warning emitted); anything more negative is an error.
    Zero-rate channels are dropped, so E_r = 0 yields an empty list.

    With correlation_length = 0 the construction reduces exactly to one
    channel A_m(omega) per site at rate gamma(omega).
    """
    if bath.model != model.SECULAR_WEAK_COUPLING:
        raise ValueError(f"secular generator requires model "
                         f"{model.SECULAR_WEAK_COUPLING}, got {bath.model}")
    channels = []
    corr = None if bath.correlation_length == 0.0 else correlation_matrix(net, bath)
    clamped = []
    for freq_bin in es.bins:
        gamma = bath_rate(freq_bin.omega, bath)
        if gamma == 0.0:
            continue
        ops = site_transition_operators(es, freq_bin)
        if corr is None:
            for m in range(net.n_sites):
                channels.append(JumpChannel(
                    operator=ops[m], rate=gamma, tag=RELAXATION,
                    omega=freq_bin.omega, site=m + 1))
            continue
        G = gamma * corr
        g, u = np.linalg.eigh(G)
        u = _fix_column_signs(u)
        floor = -1e-10 * np.abs(G).max()
        for k in range(len(g)):
            if g[k] < floor:
                raise PositivityError(
                    f"correlated rate matrix at omega={freq_bin.omega:.6g} rad/ps "
                    f"has eigenvalue {g[k]:.3e} ps^-1 below the clamp floor "
                    f"{floor:.3e}; the spatial correlation model breaks down here")
            if g[k] < 0.0:
                clamped.append((freq_bin.omega, g[k]))
                continue
            if g[k] == 0.0:
                continue
            op = np.tensordot(u[:, k], ops, axes=(0, 0))
            channels.append(JumpChannel(
                operator=op, rate=float(g[k]), tag=RELAXATION, omega=freq_bin.omega))
    if clamped:
        warnings.warn(
            f"clamped {len(clamped)} marginally negative rate eigenvalue(s) "
            f"to zero (worst {min(c[1] for c in clamped):.3e} ps^-1)",
            RuntimeWarning, stacklevel=2)
    return channels


def build_pure_dephasing_generator(net: SiteNetwork, bath: BathSpec):
    """Site-projector dephasing channels |k><k|, one per site, rate gamma_deph."""
    if bath.model != model.PURE_DEPHASING:
        raise ValueError(f"pure-dephasing generator requires model "
                         f"{model.PURE_DEPHASING}, got {bath.model}")
    channels = []
    d = net.n_sites + 1
    for k in range(1, d):
        op = np.zeros((d, d), dtype=complex)
        op[k, k] = 1.0
        channels.append(JumpChannel(
            operator=op, rate=bath.dephasing_rate, tag=SITE_DEPHASING, site=k))
    return channels


def build_loss_generator(net: SiteNetwork):
    """Lowering channels |0><m|: dissipation (Gamma_m) and trapping (kappa_m).

    Both move population to the ground state; they stay separate channels so
    the trapping flux can be isolated downstream.
    """
    channels = []
    d = net.n_sites + 1
    for m in range(1, d):
        for rate, tag in ((net.dissipation_rates[m - 1], DISSIPATION),
                          (net.trap_rates[m - 1], TRAPPING)):
            if rate > 0:
                op = np.zeros((d, d), dtype=complex)
                op[0, m] = 1.0
                channels.append(JumpChannel(operator=op, rate=float(rate), tag=tag, site=m))
    return channels


@dataclass(frozen=True)
class Liouvillian:
    """Superoperator matrix on column-vectorized density matrices."""
    matrix: np.ndarray  # (d^2, d^2) complex
    channels: tuple = ()

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def dim(self):
        """Hilbert-space dimension d; the matrix is d^2 x d^2."""
        return int(round(np.sqrt(self.matrix.shape[0])))

    @property
    def n_sites(self):
        return self.dim - 1

    @property
    def has_loss(self):
        return any(ch.tag in (DISSIPATION, TRAPPING) for ch in self.channels)

    def channel_manifest(self):
        return [ch.summary() for ch in self.channels]

    def manifest_json(self, indent=2):
        return json.dumps(self.channel_manifest(), indent=indent)


def assemble_liouvillian(H, channels) -> Liouvillian:
    """Assemble -i[H, .] plus all channel dissipators.

    Dissipator of (A, g): g (A rho A+ - 1/2 {A+A, rho}), vectorized as
    g (conj(A) kron A - 1/2 I kron A+A - 1/2 (A+A)^T kron I).
    Verifies trace preservation of the result.
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    if H.shape != (d, d):
        raise ValueError("H must be square")
    ident = np.eye(d)
    mat = -1j * (np.kron(ident, H) - np.kron(H.T, ident))
    for ch in channels:
        A = ch.operator
        if A.shape != (d, d):
            raise ValueError(
                f"channel {ch.tag} operator shape {A.shape} does not match H {H.shape}")
        if ch.rate == 0.0:
            continue
        AdA = A.conj().T @ A
        mat += ch.rate * (np.kron(A.conj(), A)
                          - 0.5 * np.kron(ident, AdA)
                          - 0.5 * np.kron(AdA.T, ident))

    trace_fn = np.zeros(d * d)
    trace_fn[np.arange(d) * (d + 1)] = 1.0
    residual = np.abs(trace_fn @ mat).max()
    scale = max(1.0, np.abs(mat).max())
    if residual > 1e-10 * scale:
        raise AssertionError(
            f"assembled Liouvillian is not trace-preserving (residual {residual:.3e})")
    return Liouvillian(matrix=mat, channels=channels)


def build_liouvillian(net: SiteNetwork, bath: BathSpec) -> Liouvillian:
    """Full pipeline: Hamiltonian, decoherence model channels, loss, assembly."""
    H = model.build_hamiltonian(net)
    if bath.model == model.SECULAR_WEAK_COUPLING:
        es = diagonalize_single_excitation(H)
        channels = build_secular_generator(es, net, bath)
    else:
        channels = build_pure_dephasing_generator(net, bath)
    channels = channels + build_loss_generator(net)
    return assemble_liouvillian(H, channels)
