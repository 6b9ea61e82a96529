"""Timing comparison of the compiled and numpy matvec backends.

Runs the same driven-chain propagation through both HamiltonianAction
backends and reports wall time per Lanczos step and the relative speedup.

Usage: python benchmarks/bench_kernels.py [L] [steps]
"""

import sys
import time

import numpy as np

from floquet_forge.dynamics import cdw_state
from floquet_forge.fock import HubbardParams, build_sector_basis
from floquet_forge.fswt import hubbard_harmonics
from floquet_forge.kernels import (HAVE_COMPILED, HamiltonianAction,
                                   lanczos_expm_multiply)


def propagate(backend, h0, diag, psi0, omega, dt, steps):
    action = HamiltonianAction(h0, diag=diag, backend=backend)
    psi = psi0.copy()
    t0 = time.perf_counter()
    for k in range(steps):
        action.set_coef(2.0 * np.cos(omega * (k + 0.5) * dt))
        psi = lanczos_expm_multiply(action, psi, -1j * dt, tol=1e-10)
    wall = time.perf_counter() - t0
    return psi, wall, action.matvecs


def main(argv):
    L = int(argv[1]) if len(argv) > 1 else 6
    steps = int(argv[2]) if len(argv) > 2 else 400
    p = HubbardParams(L=L, J=1.0, U=4.0, g=3.0, omega=12.0)
    n = (L + 1) // 2
    b = build_sector_basis(L, n, n)
    series = hubbard_harmonics(p, b)
    h0 = series.terms[(0, 0)].matrix
    diag = series.terms[(1, 1)].diagonal()
    psi0 = cdw_state(b)
    dt = 2.0 * np.pi / (40.0 * p.omega)

    print(f"L={L} sector dim={b.dim} nnz={h0.nnz} steps={steps} dt={dt:.4g}")
    backends = ["numpy"] + (["compiled"] if HAVE_COMPILED else [])
    if not HAVE_COMPILED:
        print("compiled kernel not built; timing numpy backend only")
    results = {}
    for backend in backends:
        psi, wall, matvecs = propagate(backend, h0, diag, psi0, p.omega,
                                       dt, steps)
        results[backend] = (psi, wall)
        print(f"{backend:>9}: {wall:.3f} s total, "
              f"{wall / steps * 1e3:.3f} ms/step, {matvecs} matvecs")
    if len(results) == 2:
        dev = np.max(np.abs(results["numpy"][0] - results["compiled"][0]))
        print(f"max |psi_numpy - psi_compiled| = {dev:.3e}")
        print(f"speedup: x{results['numpy'][1] / results['compiled'][1]:.2f}")


if __name__ == "__main__":
    main(sys.argv)
