# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused CSR matvec kernel: out = A @ x + coef * (diag * x).

This is the hot loop of Krylov propagation; one pass over the CSR arrays
avoids the temporary vectors scipy would allocate per step.
"""


def fused_csr_matvec(const double complex[::1] data,
                     const int[::1] indices,
                     const int[::1] indptr,
                     const double complex[::1] x,
                     double complex[::1] out,
                     const double complex[::1] diag,
                     double complex coef,
                     bint use_diag):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i, j
    cdef double complex acc
    for i in range(n):
        acc = 0
        for j in range(indptr[i], indptr[i + 1]):
            acc = acc + data[j] * x[indices[j]]
        if use_diag:
            acc = acc + coef * diag[i] * x[i]
        out[i] = acc
