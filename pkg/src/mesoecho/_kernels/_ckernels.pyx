# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for Trotter stages and the two-site Volterra march."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def apply_stage(double complex[:, ::1] psi,
                const double complex[::1] phase,
                const cnp.int64_t[::1] pair_a,
                const cnp.int64_t[::1] pair_b,
                const double[::1] pair_cos,
                const double complex[::1] pair_sin,
                const cnp.int64_t[::1] bond_ptr):
    """In-place ``psi <- R_pairs @ diag(phase) @ psi`` (pairs applied in order).

    ``bond_ptr`` delimits the pairs of each bond; the sequential loop here does
    not need it but keeps the signature shared with the numpy fallback.
    """
    cdef Py_ssize_t d = psi.shape[0]
    cdef Py_ssize_t ncol = psi.shape[1]
    cdef Py_ssize_t npair = pair_a.shape[0]
    cdef Py_ssize_t i, j, p, a, b
    cdef double complex ph, x, y, s
    cdef double c
    with nogil:
        for i in range(d):
            ph = phase[i]
            if ph != 1.0:
                for j in range(ncol):
                    psi[i, j] = psi[i, j] * ph
        for p in range(npair):
            a = pair_a[p]
            b = pair_b[p]
            c = pair_cos[p]
            s = pair_sin[p]
            for j in range(ncol):
                x = psi[a, j]
                y = psi[b, j]
                psi[a, j] = c * x + s * y
                psi[b, j] = s * x + c * y


def glbe_march(const double[::1] k_same,
               const double[::1] k_cross,
               const double[::1] free1,
               const double[::1] free2,
               double feedback,
               double source,
               double dt):
    """Trapezoidal march of the two coupled site-density Volterra equations."""
    cdef Py_ssize_t n = k_same.shape[0]
    cdef cnp.ndarray[double, ndim=1] p1_arr = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] p2_arr = np.empty(n)
    cdef double[::1] p1 = p1_arr
    cdef double[::1] p2 = p2_arr
    cdef double[::1] s1 = np.empty(n)
    cdef double[::1] s2 = np.empty(n)
    cdef Py_ssize_t m, j
    cdef double acc1, acc2, denom
    denom = 1.0 - 0.5 * dt * feedback * k_same[0]
    with nogil:
        p1[0] = free1[0]
        p2[0] = free2[0]
        s1[0] = feedback * p1[0] + source
        s2[0] = feedback * p2[0] + source
        for m in range(1, n):
            acc1 = 0.5 * (k_same[m] * s1[0] + k_cross[m] * s2[0])
            acc2 = 0.5 * (k_cross[m] * s1[0] + k_same[m] * s2[0])
            for j in range(1, m):
                acc1 = acc1 + k_same[m - j] * s1[j] + k_cross[m - j] * s2[j]
                acc2 = acc2 + k_cross[m - j] * s1[j] + k_same[m - j] * s2[j]
            # k_cross[0] == 0, so the implicit endpoint only couples each site to itself
            p1[m] = (free1[m] + dt * acc1 + 0.5 * dt * k_same[0] * source) / denom
            p2[m] = (free2[m] + dt * acc2 + 0.5 * dt * k_same[0] * source) / denom
            s1[m] = feedback * p1[m] + source
            s2[m] = feedback * p2[m] + source
    return p1_arr, p2_arr


def apply_program(double complex[:, ::1] psi,
                  const double complex[:, ::1] phases,
                  const unsigned char[::1] has_phase,
                  const cnp.int64_t[::1] pair_a,
                  const cnp.int64_t[::1] pair_b,
                  const double[::1] pair_cos,
                  const double complex[::1] pair_sin,
                  const cnp.int64_t[::1] bond_ptr,
                  const cnp.int64_t[::1] kind_bond,
                  const cnp.int64_t[::1] program):
    """Apply the stages listed in ``program`` in order, all in one call.

    Stage kind ``k`` multiplies rows by ``phases[k]`` (skipped unless
    ``has_phase[k]``) and then rotates the pairs of bonds
    ``kind_bond[k] .. kind_bond[k+1]-1``.
    """
    cdef Py_ssize_t d = psi.shape[0]
    cdef Py_ssize_t ncol = psi.shape[1]
    cdef Py_ssize_t nprog = program.shape[0]
    cdef Py_ssize_t step, k, i, j, p, a, b, lo, hi
    cdef double complex ph, x, y, s
    cdef double c
    with nogil:
        for step in range(nprog):
            k = program[step]
            if has_phase[k]:
                for i in range(d):
                    ph = phases[k, i]
                    for j in range(ncol):
                        psi[i, j] = psi[i, j] * ph
            lo = bond_ptr[kind_bond[k]]
            hi = bond_ptr[kind_bond[k + 1]]
            for p in range(lo, hi):
                a = pair_a[p]
                b = pair_b[p]
                c = pair_cos[p]
                s = pair_sin[p]
                for j in range(ncol):
                    x = psi[a, j]
                    y = psi[b, j]
                    psi[a, j] = c * x + s * y
                    psi[b, j] = s * x + c * y
