# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for piecewise-constant propagation of a 4x4 state.

One slice applies exp(dt/2 * D) . (U rho U+) . exp(dt/2 * D) where
U = exp(-2j*pi*dt*H_k) comes from a LAPACK Hermitian eigendecomposition and
D is the (constant) dissipator whose half-step exponential is precomputed
by the caller as a 16x16 matrix acting on the row-major vectorized state.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin
from scipy.linalg.cython_lapack cimport zheev

cnp.import_array()

cdef int _DIM = 4
cdef double _TWO_PI = 6.283185307179586476925286766559


cdef void _expm_herm_4(double complex* h, double dt, double complex* u) noexcept nogil:
    """u = exp(-2j*pi*dt*h) for Hermitian 4x4 h (row-major in/out)."""
    cdef double complex a[16]
    cdef double complex work[64]
    cdef double w[4]
    cdef double rwork[12]
    cdef double complex phase[4]
    cdef int n = 4, lda = 4, lwork = 64, info = 0
    cdef int i, j, k
    cdef double ang
    cdef double complex acc
    # column-major copy for LAPACK
    for j in range(4):
        for i in range(4):
            a[j * 4 + i] = h[i * 4 + j]
    zheev("V", "L", &n, a, &lda, w, work, &lwork, rwork, &info)
    for k in range(4):
        ang = -_TWO_PI * dt * w[k]
        phase[k] = cos(ang) + 1j * sin(ang)
    # u[i,j] = sum_k v_k[i] * phase_k * conj(v_k[j]); v_k[i] = a[k*4+i]
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc = acc + a[k * 4 + i] * phase[k] * a[k * 4 + j].conjugate()
            u[i * 4 + j] = acc


cdef void _conjugate_4(double complex* u, double complex* rho) noexcept nogil:
    """rho <- u rho u+ (row-major 4x4)."""
    cdef double complex tmp[16]
    cdef int i, j, k
    cdef double complex acc
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc = acc + u[i * 4 + k] * rho[k * 4 + j]
            tmp[i * 4 + j] = acc
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc = acc + tmp[i * 4 + k] * u[j * 4 + k].conjugate()
            rho[i * 4 + j] = acc


cdef void _matvec_16(double complex* e, double complex* v, double complex* out) noexcept nogil:
    cdef int i, k
    cdef double complex acc
    for i in range(16):
        acc = 0
        for k in range(16):
            acc = acc + e[i * 16 + k] * v[k]
        out[i] = acc


cdef void _rehermitize(double complex* rho) noexcept nogil:
    cdef int i, j
    cdef double complex m
    for i in range(4):
        for j in range(i, 4):
            m = 0.5 * (rho[i * 4 + j] + rho[j * 4 + i].conjugate())
            rho[i * 4 + j] = m
            rho[j * 4 + i] = m.conjugate()


def evolve_slices(
    cnp.ndarray[cnp.complex128_t, ndim=2] rho,
    cnp.ndarray[cnp.complex128_t, ndim=3] h_slices,
    cnp.ndarray[cnp.complex128_t, ndim=3] ops,
    cnp.ndarray[cnp.float64_t, ndim=2] coeffs,
    double dt,
    e_half,
    int stride,
    records,
):
    """Propagate ``rho`` in place through ``n`` slices; fill ``records``.

    H_k = h_slices[k] + sum_j coeffs[k, j] * ops[j].  ``e_half`` is the
    16x16 half-step dissipator exponential or None for unitary evolution.
    Records the state after slice k whenever (k+1) % stride == 0.
    """
    cdef Py_ssize_t n = h_slices.shape[0]
    cdef Py_ssize_t m = ops.shape[0]
    cdef bint dissipative = e_half is not None
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] e_arr
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] rec_arr
    cdef double complex* e_ptr = NULL
    cdef double complex* rec_ptr = NULL
    cdef Py_ssize_t n_rec = 0

    if not rho.flags.c_contiguous or not h_slices.flags.c_contiguous:
        raise ValueError("rho and h_slices must be C-contiguous")
    if dissipative:
        e_arr = np.ascontiguousarray(e_half, dtype=np.complex128)
        e_ptr = <double complex*> e_arr.data
    if stride > 0:
        rec_arr = records
        rec_ptr = <double complex*> rec_arr.data
        n_rec = rec_arr.shape[0]

    cdef double complex* rho_ptr = <double complex*> rho.data
    cdef double complex* h_ptr = <double complex*> h_slices.data
    cdef double complex* ops_ptr = NULL
    cdef double* c_ptr = NULL
    if m > 0:
        ops_ptr = <double complex*> ops.data
        c_ptr = <double*> coeffs.data

    cdef double complex h[16]
    cdef double complex u[16]
    cdef double complex vec[16]
    cdef double complex vec2[16]
    cdef Py_ssize_t k, i, j, r = 0
    cdef double c

    with nogil:
        for k in range(n):
            for i in range(16):
                h[i] = h_ptr[k * 16 + i]
            for j in range(m):
                c = c_ptr[k * m + j]
                for i in range(16):
                    h[i] = h[i] + c * ops_ptr[j * 16 + i]
            if dissipative:
                _matvec_16(e_ptr, rho_ptr, vec)
                _expm_herm_4(h, dt, u)
                _conjugate_4(u, vec)
                _matvec_16(e_ptr, vec, vec2)
                for i in range(16):
                    rho_ptr[i] = vec2[i]
            else:
                _expm_herm_4(h, dt, u)
                _conjugate_4(u, rho_ptr)
            if k % 256 == 255:
                _rehermitize(rho_ptr)
            if stride > 0 and (k + 1) % stride == 0 and r < n_rec:
                for i in range(16):
                    rec_ptr[r * 16 + i] = rho_ptr[i]
                r += 1
    return rho


def propagator_slices(
    cnp.ndarray[cnp.complex128_t, ndim=3] h_slices,
    cnp.ndarray[cnp.complex128_t, ndim=3] ops,
    cnp.ndarray[cnp.float64_t, ndim=2] coeffs,
    double dt,
):
    """Total unitary of the slice train: U = U_n ... U_2 U_1."""
    cdef Py_ssize_t n = h_slices.shape[0]
    cdef Py_ssize_t m = ops.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.eye(4, dtype=np.complex128)
    cdef double complex* u_total = <double complex*> out.data
    cdef double complex* h_ptr = <double complex*> h_slices.data
    cdef double complex* ops_ptr = NULL
    cdef double* c_ptr = NULL
    if m > 0:
        ops_ptr = <double complex*> ops.data
        c_ptr = <double*> coeffs.data

    cdef double complex h[16]
    cdef double complex u[16]
    cdef double complex tmp[16]
    cdef Py_ssize_t k, i, j, l
    cdef double c
    cdef double complex acc

    with nogil:
        for k in range(n):
            for i in range(16):
                h[i] = h_ptr[k * 16 + i]
            for j in range(m):
                c = c_ptr[k * m + j]
                for i in range(16):
                    h[i] = h[i] + c * ops_ptr[j * 16 + i]
            _expm_herm_4(h, dt, u)
            for i in range(4):
                for j in range(4):
                    acc = 0
                    for l in range(4):
                        acc = acc + u[i * 4 + l] * u_total[l * 4 + j]
                    tmp[i * 4 + j] = acc
            for i in range(16):
                u_total[i] = tmp[i]
    return out
