"""Matvec kernels and the Lanczos exponential used by the propagators.

A compiled Cython kernel performs the fused operation
``out = A @ x + coef * (diag * x)`` in one CSR pass; a pure numpy/scipy
fallback is selected automatically when the extension is unavailable.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import PropagationError

try:  # compiled fast path
    from ._kernels_cy import fused_csr_matvec as _fused_cy
except ImportError:  # pragma: no cover - depends on build environment
    _fused_cy = None

HAVE_COMPILED = _fused_cy is not None

__all__ = ["HAVE_COMPILED", "HamiltonianAction", "lanczos_expm_multiply"]


class HamiltonianAction:
    """Callable y = H0 @ x + coef * (diag * x), with a swappable coefficient.

    H0 is a CSR matrix (or SparseOperator); diag is an optional diagonal
    drive.  ``backend`` forces "compiled" or "numpy"; default picks the
    compiled kernel when present.
    """

    def __init__(self, h0, diag=None, backend=None):
        mat = getattr(h0, "matrix", h0).tocsr()
        self.matrix = mat
        self._data = np.ascontiguousarray(mat.data, dtype=np.complex128)
        self._indices = np.ascontiguousarray(mat.indices, dtype=np.int32)
        self._indptr = np.ascontiguousarray(mat.indptr, dtype=np.int32)
        self.diag = (None if diag is None
                     else np.ascontiguousarray(diag, dtype=np.complex128))
        self.coef = 0j
        self.dim = mat.shape[0]
        if backend is None:
            backend = "compiled" if HAVE_COMPILED else "numpy"
        if backend == "compiled" and not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but not built")
        if backend not in ("compiled", "numpy"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self.matvecs = 0
        self._empty = np.zeros(0, dtype=np.complex128)

    def set_coef(self, coef):
        self.coef = complex(coef)

    def __call__(self, x, out=None):
        self.matvecs += 1
        x = np.ascontiguousarray(x, dtype=np.complex128)
        if self.backend == "compiled":
            if out is None:
                out = np.empty(self.dim, dtype=np.complex128)
            use_diag = self.diag is not None and self.coef != 0
            _fused_cy(self._data, self._indices, self._indptr, x, out,
                      self.diag if self.diag is not None else self._empty,
                      self.coef, use_diag)
            return out
        y = self.matrix @ x
        if self.diag is not None and self.coef != 0:
            y += self.coef * (self.diag * x)
        return y


def lanczos_expm_multiply(apply_h, v, tau, tol=1e-10, m_max=60):
    """w = exp(tau * H) v for a Hermitian action, by the Lanczos method.

    apply_h maps a vector to H @ vector; tau is typically -1j*dt.  The
    a-posteriori error estimate is beta_m * |last component of
    exp(tau*T_m) e1|; iteration stops once it drops below ``tol`` relative
    to ||v||.  Full reorthogonalization keeps the basis clean at the small
    subspace sizes used here.
    """
    v = np.asarray(v, dtype=np.complex128)
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0.0:
        return v.copy()
    V = np.empty((m_max + 1, v.shape[0]), dtype=np.complex128)
    V[0] = v / beta0
    alphas = np.empty(m_max)
    betas = np.empty(m_max)
    m = 0
    u = None
    err = np.inf
    for j in range(m_max):
        w = apply_h(V[j])
        alpha = np.vdot(V[j], w).real
        w = w - alpha * V[j]
        if j > 0:
            w = w - betas[j - 1] * V[j - 1]
        # full reorthogonalization (one pass)
        proj = V[:j + 1].conj() @ w
        w = w - V[:j + 1].T @ proj
        alphas[j] = alpha
        beta = float(np.linalg.norm(w))
        betas[j] = beta
        m = j + 1
        theta, S = eigh_tridiagonal(alphas[:m], betas[:m - 1])
        u = S @ (np.exp(tau * theta) * S[0, :])
        err = abs(beta * u[-1])
        if err <= tol or beta <= 1e-14 * max(1.0, abs(alpha)):
            break
        V[j + 1] = w / beta
    else:
        raise PropagationError(
            f"Lanczos exponential did not converge: m={m_max}, "
            f"|tau|={abs(tau):.3e}, error estimate {err:.3e} > tol {tol:.3e}")
    return (V[:m].T @ u) * beta0
