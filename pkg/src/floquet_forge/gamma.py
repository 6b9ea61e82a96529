"""Momentum-resolved interband vertex and interactions derived from it.

The central object is the N x N vertex matrix over the pair-momentum index,
built from a Coulomb profile V_q and an interband coupling profile J12.
From it: the mean-field screened denominator, an RPA-style geometric series
check against the exact inverse, the bound-state eigenproblem, scattering
strengths between dressed pairs, the cavity-mediated global interaction, and
the Coulomb-mixing self-energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BandResonance
from .kspace import BandGrid, CavitySpec

__all__ = [
    "InteractionProfile",
    "constant_profile",
    "valley_dip_profile",
    "phase_winding_profile",
    "GammaMatrix",
    "gamma_matrix",
    "mf_gamma_matrix",
    "rpa_kernel",
    "series_vs_inverse",
    "eigen_sign_analysis",
    "mf_screened_denominator",
    "scattering_strength",
    "interaction_weight",
    "cavity_global_interaction",
    "coulomb_mix_selfenergy",
]

MAX_DENSE = 1024


@dataclass(frozen=True)
class InteractionProfile:
    """Coulomb matrix elements V_q and interband couplings J12_{k,s}.

    ``Vq`` is real with V_q = V_{-q} (indexed by wrapped momentum-difference
    index, so Vq[0, 0] is zero transfer).  ``Jcoupling`` has shape
    (2, Nx, Ny) — one complex coupling map per spin — and is bounded by 1.
    """

    Vq: np.ndarray
    Jcoupling: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.Vq, dtype=float)
        j = np.asarray(self.Jcoupling, dtype=np.complex128)
        if v.ndim != 2:
            raise ValueError(f"Vq must be 2-d, got shape {v.shape}")
        if j.shape == v.shape:
            j = np.stack([j, j])
        if j.shape != (2,) + v.shape:
            raise ValueError(f"Jcoupling must have shape (2,)+{v.shape}, "
                             f"got {j.shape}")
        nx, ny = v.shape
        mirrored = v[(-np.arange(nx)) % nx][:, (-np.arange(ny)) % ny]
        if np.max(np.abs(v - mirrored)) > 1e-12 * max(1.0, np.max(np.abs(v))):
            raise ValueError("Vq must satisfy V_q = V_{-q}")
        if np.max(np.abs(j)) > 1.0 + 1e-12:
            raise ValueError("couplings |J12| must not exceed 1")
        object.__setattr__(self, "Vq", v)
        object.__setattr__(self, "Jcoupling", j)

    @property
    def shape(self):
        return self.Vq.shape


def _torus_delta(grid: BandGrid, K):
    """Wrapped momentum displacement of every grid point from index K."""
    kx0 = grid.kx[int(K[0]) % grid.kx.size]
    ky0 = grid.ky[int(K[1]) % grid.ky.size]
    two_pi = 2.0 * math.pi
    dx = (grid.kx - kx0 + math.pi) % two_pi - math.pi
    dy = (grid.ky - ky0 + math.pi) % two_pi - math.pi
    return dx[:, None] + 0.0 * dy[None, :], 0.0 * dx[:, None] + dy[None, :]


def constant_profile(grid: BandGrid, U):
    """Momentum-independent Coulomb U with unit couplings everywhere."""
    shape = (grid.kx.size, grid.ky.size)
    return InteractionProfile(Vq=np.full(shape, float(U)),
                              Jcoupling=np.ones(shape))


def valley_dip_profile(grid: BandGrid, U, K, width):
    """Unit coupling with a Gaussian suppression centered at grid index K."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    dx, dy = _torus_delta(grid, K)
    mag = 1.0 - np.exp(-(dx ** 2 + dy ** 2) / (2.0 * width ** 2))
    return InteractionProfile(Vq=np.full(mag.shape, float(U)), Jcoupling=mag)


def phase_winding_profile(grid: BandGrid, U, K, Kp, width):
    """Valley dip at K with a unit-winding phase around grid index Kp."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    dx, dy = _torus_delta(grid, K)
    mag = 1.0 - np.exp(-(dx ** 2 + dy ** 2) / (2.0 * width ** 2))
    px, py = _torus_delta(grid, Kp)
    phase = np.arctan2(py, px)
    return InteractionProfile(Vq=np.full(mag.shape, float(U)),
                              Jcoupling=mag * np.exp(1j * phase))


@dataclass(frozen=True)
class GammaMatrix:
    """Dense pair-propagator vertex at fixed (k, q, omega).

    ``matrix`` is real symmetric, indexed by the flattened grid index
    p = ix * Ny + iy.
    """

    matrix: np.ndarray
    omega: float
    k: tuple
    q: tuple
    grid_shape: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        scale = max(1.0, float(np.max(np.abs(m))))
        if float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
            raise ValueError("vertex matrix must be symmetric")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]


def _flat(grid: BandGrid, k):
    ny = grid.ky.size
    return (int(k[0]) % grid.kx.size) * ny + (int(k[1]) % ny)


def _difference_table(n):
    idx = np.arange(n)
    return (idx[:, None] - idx[None, :]) % n


def gamma_matrix(grid: BandGrid, prof: InteractionProfile, k, q, omega,
                 allow_large=False):
    """Vertex matrix at pair momentum labels (k, q).

    [G]_{p,p'} = (w + e1_k - e1_{k+q} + e1_{p'+q} - e2_{p'}
                  - sum_{q' != 0} V_{q'}/N) delta_{p,p'}
                 + (1 - delta_{p,p'}) V_{p-p'}/N.

    ``k`` is a grid index pair; ``q`` is an index shift (q = (0,0) means zero
    transfer).
    """
    nx, ny = grid.kx.size, grid.ky.size
    if prof.shape != (nx, ny):
        raise ValueError(f"profile shape {prof.shape} does not match grid "
                         f"({nx}, {ny})")
    n = nx * ny
    if n > MAX_DENSE and not allow_large:
        raise ValueError(f"dense vertex capped at {MAX_DENSE} momenta, "
                         f"got {n}; pass allow_large=True to override")
    ikx, iky = int(k[0]) % nx, int(k[1]) % ny
    iqx, iqy = int(q[0]) % nx, int(q[1]) % ny
    sum_v = (float(np.sum(prof.Vq)) - float(prof.Vq[0, 0])) / n
    eps1_shift = np.roll(np.roll(grid.eps1, -iqx, axis=0), -iqy, axis=1)
    diag = (omega + grid.eps1[ikx, iky]
            - grid.eps1[(ikx + iqx) % nx, (iky + iqy) % ny]
            + eps1_shift - grid.eps2 - sum_v)
    dif_x = _difference_table(nx)
    dif_y = _difference_table(ny)
    m = prof.Vq[dif_x[:, None, :, None],
                dif_y[None, :, None, :]].reshape(n, n) / n
    np.fill_diagonal(m, 0.0)
    m[np.diag_indices(n)] += diag.ravel()
    return GammaMatrix(matrix=m, omega=float(omega),
                       k=(ikx, iky), q=(iqx, iqy), grid_shape=(nx, ny))


def mf_gamma_matrix(grid: BandGrid, prof: InteractionProfile, omega,
                    allow_large=False):
    """Zero-transfer vertex; independent of the spectator momentum."""
    return gamma_matrix(grid, prof, (0, 0), (0, 0), omega,
                        allow_large=allow_large)


def _checked_inverse(m):
    diag_scale = max(1.0, float(np.max(np.abs(m))))
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise BandResonance(f"vertex matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(inv)) \
            or np.max(np.abs(inv)) * np.finfo(float).eps * diag_scale > 1e-3:
        raise BandResonance("vertex matrix is numerically singular")
    return inv


def rpa_kernel(gm: GammaMatrix):
    """Split G = diag(1/Gamma_pp), eta = diag(Gamma) - Gamma.

    The inverse expands as sum_n (G eta)^n G when the kernel's spectral
    radius is below one.
    """
    d = np.diag(gm.matrix)
    if np.min(np.abs(d)) < 1e-12 * max(1.0, float(np.max(np.abs(d)))):
        raise BandResonance("vertex diagonal vanishes; no propagator split")
    g = np.diag(1.0 / d)
    eta = np.diag(d) - gm.matrix
    return g, eta


def series_vs_inverse(grid: BandGrid, prof: InteractionProfile, k, q, omega,
                      n_terms=200):
    """Geometric resummation of the vertex inverse versus direct inversion.

    Returns the partial series, the exact inverse, their max deviation, the
    kernel spectral radius, and a convergence flag.
    """
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    gm = gamma_matrix(grid, prof, k, q, omega)
    g, eta = rpa_kernel(gm)
    kernel = g @ eta
    rho = float(np.max(np.abs(np.linalg.eigvals(kernel))))
    series = g.copy()
    term = g.copy()
    for _ in range(n_terms - 1):
        term = kernel @ term
        series += term
    inverse = _checked_inverse(gm.matrix)
    dev = float(np.max(np.abs(series - inverse)))
    return {"series": series, "inverse": inverse, "max_dev": dev,
            "rho": rho, "converged": rho < 1.0}


def eigen_sign_analysis(gm: GammaMatrix):
    """Pair eigenenergies from the linear frequency dependence.

    The vertex is omega * I + M, so its zero crossings sit at
    E_j = omega - lambda_j(Gamma(omega)).  Returns energies ascending, the
    matching eigenvector columns, and the count below zero.
    """
    lam, vec = np.linalg.eigh(gm.matrix)
    energies = gm.omega - lam
    order = np.argsort(energies)
    energies = energies[order]
    vec = vec[:, order]
    return {"energies": energies, "vectors": vec,
            "negative_count": int(np.sum(energies < 0.0))}


def mf_screened_denominator(grid: BandGrid, prof: InteractionProfile, omega):
    """Pair-screened detuning per final momentum and spin.

    1/Delta_kf = sum_k J12_{k,s} [Gamma_MF^{-1}]_{k,kf}; returns shape
    (2, Nx, Ny), cast to real when the couplings allow it.
    """
    gm = mf_gamma_matrix(grid, prof, omega)
    inv = _checked_inverse(gm.matrix)
    nx, ny = gm.grid_shape
    out = np.empty((2, nx * ny), dtype=np.complex128)
    for s in (0, 1):
        v = prof.Jcoupling[s].ravel() @ inv
        scale = max(1.0, float(np.max(np.abs(v))))
        if np.any(np.abs(v) < 1e-14 * scale):
            raise BandResonance("pair screening sum vanishes at some "
                                "momentum; denominator undefined")
        out[s] = 1.0 / v
    if float(np.max(np.abs(out.imag))) <= 1e-12 * float(np.max(np.abs(out))):
        out = out.real
    return out.reshape(2, nx, ny)


def scattering_strength(grid: BandGrid, prof: InteractionProfile, g, omega,
                        k, k1, q, s=0, sp=0):
    """Drive-induced scattering amplitude between pair momenta k and k1.

    g^2 sum_{k'} (J_{k',s}/(w + e12_{k'}) - J_{k,s}/(w + e12_k))
    * V_{k'-k}/N * [Gamma_{k,q}^{-1}]_{k',k1}.
    """
    nx, ny = grid.kx.size, grid.ky.size
    gm = gamma_matrix(grid, prof, k, q, omega)
    inv = _checked_inverse(gm.matrix)
    den = omega + (grid.eps1 - grid.eps2).ravel()
    scale = max(1.0, float(np.max(np.abs(den))))
    if np.min(np.abs(den)) < 1e-9 * scale:
        raise BandResonance("drive resonant with a bare interband "
                            "transition; resolvent undefined")
    js = prof.Jcoupling[s].ravel()
    ratio = js / den
    kf = _flat(grid, k)
    ikx, iky = int(k[0]) % nx, int(k[1]) % ny
    vrow = prof.Vq[(np.arange(nx)[:, None] - ikx) % nx,
                   (np.arange(ny)[None, :] - iky) % ny].ravel()
    diff = ratio - ratio[kf]
    k1f = _flat(grid, k1)
    return complex(g ** 2 * np.sum(diff * vrow / (nx * ny) * inv[:, k1f]))


def interaction_weight(grid: BandGrid, prof: InteractionProfile, g, omega,
                       k, k1, q, s=0, sp=0):
    """Hermitized pair-interaction weight.

    (1/2)(V_{k,k1,q} J_{k1,s}^* + J_{k,s} V_{k1,k,q}^*); symmetric under
    simultaneous exchange and conjugation by construction.
    """
    nx, ny = grid.kx.size, grid.ky.size
    v_fwd = scattering_strength(grid, prof, g, omega, k, k1, q, s, sp)
    v_rev = scattering_strength(grid, prof, g, omega, k1, k, q, s, sp)
    jk = complex(prof.Jcoupling[s][int(k[0]) % nx, int(k[1]) % ny])
    jk1 = complex(prof.Jcoupling[s][int(k1[0]) % nx, int(k1[1]) % ny])
    return 0.5 * (v_fwd * np.conj(jk1) + jk * np.conj(v_rev))


def cavity_global_interaction(grid: BandGrid, prof: InteractionProfile,
                              cav: CavitySpec, omega, kf, kfp, s=0, sp=0):
    """Cavity-mediated interaction between dressed pairs at kf and kf'.

    -(g^2 gc0^2/(N delta_c)) Re[(sum_k [X]_{k,kf} J_{k,s}) J_{kf',sp}^*]
    * sum_{k'} [X]_{k',kf'}, with X the inverse zero-transfer vertex.
    """
    gm = mf_gamma_matrix(grid, prof, omega)
    inv = _checked_inverse(gm.matrix)
    n = gm.dim
    kf_f = _flat(grid, kf)
    kfp_f = _flat(grid, kfp)
    js = prof.Jcoupling[s].ravel()
    jsp = prof.Jcoupling[sp].ravel()
    weighted = complex(inv[:, kf_f] @ js)
    plain = float(np.sum(inv[:, kfp_f]))
    re_part = (weighted * np.conj(jsp[kfp_f])).real
    return -(cav.g ** 2 * cav.gc0 ** 2 / (n * cav.delta_c)) \
        * re_part * plain


def coulomb_mix_selfenergy(grid: BandGrid, prof: InteractionProfile, g,
                           omega, K):
    """Coulomb-mixing self-energy at total momentum index K.

    sum_k Re[V_{k,k,K-k} J_{k}^*]; nonzero through neighboring couplings
    even where J vanishes at K itself.
    """
    nx, ny = grid.kx.size, grid.ky.size
    ikk_x, ikk_y = int(K[0]) % nx, int(K[1]) % ny
    total = 0.0
    j0 = prof.Jcoupling[0]
    for ix in range(nx):
        for iy in range(ny):
            qshift = ((ikk_x - ix) % nx, (ikk_y - iy) % ny)
            v = scattering_strength(grid, prof, g, omega, (ix, iy), (ix, iy),
                                    qshift, 0, 0)
            total += (v * np.conj(j0[ix, iy])).real
    return float(total)
