"""Time evolution under a Liouvillian and the exact time-integral solve.

States are (N+1) x (N+1) complex density matrices with index 0 the shared
ground state.  Vectorization is column-major throughout (numpy order='F'),
matching the Liouvillian assembly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .generators import Liouvillian

EXCITED_POP_CUTOFF = 1e-9
DEFAULT_MAX_STEP = 0.005  # ps
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
MAX_HORIZON = 20_000.0  # ps

TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8


class IntegrationError(RuntimeError):
    """Propagation failed or produced an invalid state."""


def localized_state(m, n_sites) -> np.ndarray:
    """Pure state |m><m| with the excitation on site m (1-based)."""
    if not 1 <= m <= n_sites:
        raise ValueError(f"site index {m} out of range 1..{n_sites}")
    rho = np.zeros((n_sites + 1, n_sites + 1), dtype=complex)
    rho[m, m] = 1.0
    return rho


def assert_valid_state(rho, context=""):
    """Check hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho)
    problems = []
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITICITY_TOL:
        problems.append(f"hermiticity deviation {herm:.3e}")
    tr = abs(np.trace(rho).real - 1.0)
    if tr > TRACE_TOL:
        problems.append(f"trace deviation {tr:.3e}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < EIGENVALUE_FLOOR:
        problems.append(f"negative eigenvalue {lo:.3e}")
    if problems:
        where = f" ({context})" if context else ""
        raise IntegrationError("invalid density matrix" + where + ": " + "; ".join(problems))


def _vec(rho):
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def _unvec(y, d):
    return y.reshape((d, d), order="F")


def _excited_diag_indices(d):
    return np.arange(1, d) * (d + 1)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution of the master equation."""
    times: np.ndarray  # (M,), ps
    states: np.ndarray  # (M, d, d) complex
    max_step: float
    stats: dict

    def __post_init__(self):
        self.times.flags.writeable = False
        self.states.flags.writeable = False

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def n_sites(self):
        return self.dim - 1

    def populations(self):
        """(M, d) real array of diagonal entries."""
        return np.einsum("tii->ti", self.states).real

    def excited_population(self):
        return self.populations()[:, 1:].sum(axis=1)


def default_horizon(liouv: Liouvillian) -> float:
    """min(50 / kappa_max, 20 ns); requires at least one trapping channel."""
    kappas = [ch.rate for ch in liouv.channels if ch.tag == "Trapping"]
    if not kappas:
        raise ValueError("no trapping channel; pass an explicit horizon")
    return min(50.0 / max(kappas), MAX_HORIZON)


def _check_trajectory(times, states, liouv):
    traces = np.einsum("tii->t", states).real
    worst_tr = np.abs(traces - 1.0).max()
    if worst_tr > TRACE_TOL:
        k = int(np.abs(traces - 1.0).argmax())
        raise IntegrationError(
            f"trace deviation {worst_tr:.3e} at t={times[k]:.6g} ps")
    herm = np.abs(states - states.conj().transpose(0, 2, 1)).max()
    if herm > HERMITICITY_TOL:
        raise IntegrationError(f"hermiticity deviation {herm:.3e} along trajectory")
    eigs = np.linalg.eigvalsh(0.5 * (states + states.conj().transpose(0, 2, 1)))
    lo = eigs.min()
    if lo < EIGENVALUE_FLOOR:
        k = int(eigs.min(axis=1).argmin())
        raise IntegrationError(
            f"negative eigenvalue {lo:.3e} at t={times[k]:.6g} ps")


def evolve(rho0, liouv: Liouvillian, horizon=None, rtol=DEFAULT_RTOL,
           atol=DEFAULT_ATOL, max_step=DEFAULT_MAX_STEP, method="rk45",
           check=True) -> Trajectory:
    """Propagate rho0 to the horizon, sampled every max_step.

    method "rk45" integrates with an adaptive embedded Runge-Kutta pair and
    dense output on the uniform grid; "expm" steps with the one-step matrix
    exponential, which is exact for this time-independent linear equation up
    to the exponential's own rounding.  Both stop early once the excited
    population falls below 1e-9 (flagged in stats).  State invariants are
    checked at every sample and violations abort.
    """
    d = liouv.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ValueError(f"state shape {rho0.shape} does not match Liouvillian dim {d}")
    if check:
        assert_valid_state(rho0, "initial state")
    if horizon is None:
        horizon = default_horizon(liouv)
    if horizon <= 0:
        raise ValueError("horizon must be positive")

    n_steps = max(1, int(np.ceil(horizon / max_step)))
    times = np.linspace(0.0, horizon, n_steps + 1)
    exc_idx = _excited_diag_indices(d)
    y0 = _vec(rho0)
    L = liouv.matrix

    stats = {"method": method, "rtol": rtol, "atol": atol, "max_step": max_step,
             "horizon": horizon, "terminated_early": False}

    if method == "rk45":
        def rhs(t, y):
            return L @ y

        def drained(t, y):
            return y[exc_idx].real.sum() - EXCITED_POP_CUTOFF

        drained.terminal = True
        drained.direction = -1
        sol = solve_ivp(rhs, (0.0, horizon), y0, method="RK45", t_eval=times,
                        rtol=rtol, atol=atol, events=drained)
        if not sol.success and sol.status != 1:
            raise IntegrationError(f"integration failed: {sol.message}")
        ys = sol.y.T
        times = sol.t
        stats["nfev"] = int(sol.nfev)
        stats["terminated_early"] = sol.status == 1
    elif method == "expm":
        dt = times[1] - times[0]
        P = expm(L * dt)
        ys = np.empty((len(times), d * d), dtype=complex)
        ys[0] = y0
        last = len(times) - 1
        for k in range(1, len(times)):
            ys[k] = P @ ys[k - 1]
            if ys[k][exc_idx].real.sum() < EXCITED_POP_CUTOFF:
                last = k
                stats["terminated_early"] = True
                break
        ys = ys[:last + 1]
        times = times[:last + 1]
        stats["nfev"] = len(times) - 1
    else:
        raise ValueError(f"unknown method {method!r}; use 'rk45' or 'expm'")

    if len(times) < 2:
        raise IntegrationError(
            "trajectory has fewer than two samples; horizon shorter than max_step?")

    states = np.ascontiguousarray(
        ys.reshape(-1, d, d).transpose(0, 2, 1))  # undo column-major per sample
    stats["n_samples"] = len(times)
    exc = np.einsum("tii->ti", states).real[:, 1:].sum(axis=1)
    stats["final_excited_population"] = float(exc[-1])
    if liouv.has_loss:
        stats["excited_population_monotone"] = bool(np.all(np.diff(exc) <= 1e-10))
    if check:
        _check_trajectory(times, states, liouv)
    return Trajectory(times=np.array(times), states=states, max_step=max_step, stats=stats)


def _excited_block_indices(d):
    cols, rows = np.meshgrid(np.arange(1, d), np.arange(1, d))
    return (rows + d * cols).reshape(-1, order="F")


def integrated_state(liouv: Liouvillian, rho0) -> np.ndarray:
    """Exact time integral of the excited block, in ps.

    Solves L_exc vec(rho_bar) = -vec(rho0_exc); valid because the excited
    block is dynamically closed (ground row/column never feed back).  The
    result has the ground row/column zeroed.
    """
    d = liouv.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ValueError(f"state shape {rho0.shape} does not match Liouvillian dim {d}")
    idx = _excited_block_indices(d)
    L_exc = liouv.matrix[np.ix_(idx, idx)]
    b = _vec(rho0)[idx]
    try:
        x = np.linalg.solve(L_exc, -b)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "excited block of the Liouvillian is singular: no decay path; "
            "give at least one site a nonzero dissipation or trap rate") from exc
    residual = np.abs(L_exc @ x + b).max()
    if residual > 1e-8 * max(1.0, np.abs(b).max()):
        raise ValueError(
            f"integrated-state solve is ill-conditioned (residual {residual:.3e}); "
            "check that every site has a decay path")
    out = np.zeros((d, d), dtype=complex)
    out[1:, 1:] = x.reshape((d - 1, d - 1), order="F")
    return out


def export_trajectory_csv(traj: Trajectory, path):
    """Write time_ps, populations p0..pN, then upper-triangle |a_ij|."""
    d = traj.dim
    header = ["time_ps"] + [f"p{i}" for i in range(d)]
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    header += [f"coh_{i}_{j}" for i, j in pairs]
    pops = traj.populations()
    cohs = np.abs(np.stack([traj.states[:, i, j] for i, j in pairs], axis=1))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(traj.times)):
            row = [traj.times[k], *pops[k], *cohs[k]]
            fh.write(",".join("%.12g" % v for v in row) + "\n")
