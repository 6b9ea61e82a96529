"""Time evolution and validation observables.

Exact propagation of the driven chain (midpoint-exponential stepping with
Krylov exponentials), static propagation of candidate effective Hamiltonians,
Loschmidt return rates, the normalized RMS mismatch metric, and the exact
dipole absorbance of the two-band chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PropagationError
from .fock import (SectorBasis, SparseOperator, TwoBandChainParams,
                   build_sector_basis, build_two_band_chain)
from .kernels import HamiltonianAction, lanczos_expm_multiply
from .sylvester import HarmonicSeries

__all__ = [
    "Trajectory",
    "cdw_state",
    "evolve_exact",
    "evolve_static",
    "return_rate",
    "nrmse",
    "return_rate_benchmark",
    "dipole_excitations",
    "absorbance_ed",
]

NORM_TOL = 1e-9


@dataclass
class Trajectory:
    """Sampled wavefunction history: times (nt,), states (nt, dim)."""

    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=np.complex128)
        if self.times.ndim != 1 or self.states.ndim != 2 \
                or self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times (nt,) and states (nt, dim) required")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        norms = np.linalg.norm(self.states, axis=1)
        drift = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
        if drift > NORM_TOL:
            raise PropagationError(
                f"norm drift {drift:.3e} exceeds {NORM_TOL:.0e}")
        self.meta.setdefault("norm_drift", drift)

    @property
    def dim(self):
        return self.states.shape[1]


def cdw_state(b: SectorBasis):
    """Doublons on alternating sites starting at the chain head.

    Defined in the (ceil(L/2), ceil(L/2)) sector; raises if ``b`` is any
    other sector.
    """
    want = (b.L + 1) // 2
    if b.n_up != want or b.n_down != want:
        raise ValueError(
            f"density-wave state lives in the ({want}, {want}) sector of "
            f"L={b.L}, got ({b.n_up}, {b.n_down})")
    state = 0
    for j in range(0, b.L, 2):
        state |= (1 << j) | (1 << (j + b.L))
    psi = np.zeros(b.dim, dtype=np.complex128)
    psi[b.position(state)] = 1.0
    return psi


def _collapse_harmonics(series: HarmonicSeries):
    """Sum orders at each harmonic; returns {j: SparseOperator}."""
    out = {}
    for (n, j), op in series.terms.items():
        if not isinstance(op, SparseOperator):
            raise TypeError("series must be materialized on a sector basis")
        out[j] = op if j not in out else out[j] + op
    return out


def _krylov_step(action, psi, tau, tol, depth=0):
    try:
        return lanczos_expm_multiply(action, psi, tau, tol=tol)
    except PropagationError:
        if depth >= 8:
            raise
        half = tau / 2.0
        mid = _krylov_step(action, psi, half, tol, depth + 1)
        return _krylov_step(action, mid, half, tol, depth + 1)


def evolve_exact(series: HarmonicSeries, psi0, t_final, dt=None,
                 sample_dt=None, tol=1e-10):
    """Propagate under the full time-periodic Hamiltonian.

    Midpoint-exponential stepping: each step applies
    exp(-i dt H(t + dt/2)) by a Lanczos exponential with per-step tolerance
    ``tol``.  ``dt`` must resolve the drive (at most a twentieth of the
    period); the default is a fortieth.  Samples are stored every
    ``sample_dt`` (every step when None); t=0 and t=t_final are always
    included.
    """
    omega = series.omega
    dt_max = 2.0 * math.pi / (20.0 * omega)
    if dt is None:
        dt = dt_max / 2.0
    if dt > dt_max * (1.0 + 1e-12):
        raise ValueError(
            f"dt={dt:.4g} does not resolve the drive; need <= {dt_max:.4g}")
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    steps = max(1, int(round(t_final / dt)))
    dt_eff = t_final / steps
    if sample_dt is None:
        stride = 1
    else:
        stride = max(1, int(round(sample_dt / dt_eff)))

    byj = _collapse_harmonics(series)
    h0 = byj.get(0)
    if h0 is None:
        raise ValueError("series lacks a static (j=0) harmonic")
    pos = sorted(j for j in byj if j > 0)
    neg_ok = all(-j in byj for j in pos) and \
        all(j > 0 or -j in byj for j in byj)

    psi = np.ascontiguousarray(np.asarray(psi0, dtype=np.complex128))
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > NORM_TOL:
        raise ValueError(f"psi0 must be normalized, |psi|={nrm:.12g}")

    fast = (pos == [1] and neg_ok
            and byj[1].allclose(byj[-1], atol=1e-14 * max(byj[1].max_abs(), 1.0))
            and byj[1].matrix.nnz == np.count_nonzero(byj[1].diagonal()))
    sample_states = [psi.copy()]
    sample_times = [0.0]
    if fast:
        action = HamiltonianAction(byj[0].matrix, diag=byj[1].diagonal())
    else:
        action = None
    for k in range(steps):
        t_mid = (k + 0.5) * dt_eff
        if fast:
            action.set_coef(2.0 * math.cos(omega * t_mid))
        else:
            m = byj[0].matrix.copy()
            for j in pos:
                ph = np.exp(1j * j * omega * t_mid)
                m = m + ph * byj[j].matrix + np.conj(ph) * byj[-j].matrix
            action = HamiltonianAction(m)
        psi = _krylov_step(action, psi, -1j * dt_eff, tol)
        if (k + 1) % stride == 0 or k + 1 == steps:
            sample_states.append(psi.copy())
            sample_times.append((k + 1) * dt_eff)
    return Trajectory(np.array(sample_times), np.array(sample_states),
                      meta={"dt": dt_eff, "steps": steps,
                            "method": "krylov-midpoint", "tol": tol})


def evolve_static(H: SparseOperator, psi0, times):
    """Propagate under a static Hamiltonian by dense diagonalization."""
    if H.dim > 8192:
        raise ValueError(f"dense static propagation capped at dim 8192, "
                         f"got {H.dim}")
    if not H.hermitian:
        raise ValueError("static Hamiltonian must be Hermitian")
    times = np.asarray(times, dtype=float)
    eps, V = np.linalg.eigh(H.to_dense())
    amps = V.conj().T @ np.asarray(psi0, dtype=np.complex128)
    states = (V @ (np.exp(-1j * np.outer(eps, times)) * amps[:, None])).T
    return Trajectory(times, states, meta={"method": "static-eigh"})


def return_rate(traj: Trajectory, psi0):
    """Loschmidt return probability |<psi0|psi(t)>|^2 along a trajectory."""
    ref = np.asarray(psi0, dtype=np.complex128)
    overlaps = traj.states @ ref.conj()
    return np.abs(overlaps) ** 2


def _trapz(y, x):
    f = getattr(np, "trapezoid", None)
    return float(f(y, x)) if f is not None else float(np.trapz(y, x))


def nrmse(L_approx, L_exact, t_final):
    """Normalized RMS mismatch of two return-rate histories.

    sqrt(mean squared deviation) over the mean of the exact signal, both
    time-averaged by the trapezoid rule on the uniform grid [0, t_final].
    """
    a = np.asarray(L_approx, dtype=float)
    e = np.asarray(L_exact, dtype=float)
    if a.shape != e.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length histories with >= 2 samples")
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    x = np.linspace(0.0, t_final, a.size)
    mean_ex = _trapz(e, x) / t_final
    if mean_ex <= 0:
        raise ValueError("exact signal has non-positive mean")
    ms = _trapz((a - e) ** 2, x) / t_final
    return math.sqrt(ms) / mean_ex


def return_rate_benchmark(p, b, hams, t_final=60.0, dt=None, sample_dt=0.1,
                          tol=1e-10):
    """Loschmidt benchmark: exact drive versus static candidates.

    ``hams`` maps labels to static SparseOperators.  Returns times, the
    exact return rate, per-label return rates, and per-label mismatch.
    """
    from .fswt import hubbard_harmonics

    psi0 = cdw_state(b)
    series = hubbard_harmonics(p, b)
    traj = evolve_exact(series, psi0, t_final, dt=dt, sample_dt=sample_dt,
                        tol=tol)
    L_ex = return_rate(traj, psi0)
    curves, errors = {}, {}
    for label, H in hams.items():
        st = evolve_static(H, psi0, traj.times)
        curves[label] = return_rate(st, psi0)
        errors[label] = nrmse(curves[label], L_ex, t_final)
    return {"times": traj.times, "L_exact": L_ex, "curves": curves,
            "nrmse": errors, "norm_drift": traj.meta["norm_drift"]}


# ---------------------------------------------------------------------------
# two-band chain absorbance


def _lower_band_product_state(L):
    low = (1 << L) - 1  # band-1 orbitals occupy indices 0..L-1
    return low | (low << (2 * L))


def dipole_excitations(p: TwoBandChainParams):
    """Dipole-coupled excitation energies and weights from the filled band.

    The fully filled band-1 product state is an exact eigenstate (interband
    kinetic terms are absent and band-1 hopping is Pauli blocked); this is
    asserted before diagonalizing.  Returns (E_n - E_G, |<n|d|G>|^2) arrays.
    """
    b = build_sector_basis(2 * p.L, p.L, p.L)
    ops = build_two_band_chain(p, b)
    H, d = ops["H0"], ops["dipole"]
    g_idx = b.position(_lower_band_product_state(p.L))
    col = H.matrix.getcol(g_idx).toarray().ravel()
    e_g = col[g_idx].real
    col[g_idx] = 0.0
    purity = np.abs(col).max() if col.size else 0.0
    assert purity <= 1e-12 * max(1.0, abs(e_g)), \
        "filled lower band is not an eigenstate"
    eps, V = np.linalg.eigh(H.to_dense())
    psi_g = np.zeros(b.dim, dtype=np.complex128)
    psi_g[g_idx] = 1.0
    amps = V.conj().T @ (d.matrix @ psi_g)
    return eps - e_g, np.abs(amps) ** 2


def absorbance_ed(p: TwoBandChainParams, omega_grid, gamma_broadening):
    """Lorentzian-broadened dipole absorbance of the two-band chain.

    alpha(w) = (gamma/pi) sum_n |<n|d|G>|^2 / ((w - (E_n - E_G))^2 + gamma^2)
    with |G> the filled lower band.
    """
    if not gamma_broadening > 0:
        raise ValueError(f"broadening must be positive, "
                         f"got {gamma_broadening}")
    omega_grid = np.asarray(omega_grid, dtype=float)
    de, w2 = dipole_excitations(p)
    g = gamma_broadening
    alpha = (g / math.pi) * np.sum(
        w2[None, :] / ((omega_grid[:, None] - de[None, :]) ** 2 + g ** 2),
        axis=1)
    return alpha
