# cython: language_level=3
"""Compiled kernels: complex Cholesky, triangular solves, one-sided Jacobi
SVD and the amplitude projection. Mirrors ``_pykernels`` call-for-call."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

from gpspr.errors import NotPositiveDefiniteError

cnp.import_array()

cdef double JACOBI_TOL = 1e-15
cdef int JACOBI_MAX_SWEEPS = 80


def cholesky(M):
    cdef const double complex[:, ::1] A = np.ascontiguousarray(M, dtype=np.complex128)
    cdef Py_ssize_t n = A.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] L = out
    cdef Py_ssize_t i, j, k
    cdef double d, ljj
    cdef double complex acc
    for j in range(n):
        d = A[j, j].real
        for k in range(j):
            d -= L[j, k].real * L[j, k].real + L[j, k].imag * L[j, k].imag
        if not d > 0.0:
            raise NotPositiveDefiniteError(f"non-positive pivot {d!r} at column {j}")
        ljj = sqrt(d)
        L[j, j] = ljj
        for i in range(j + 1, n):
            acc = A[i, j]
            for k in range(j):
                acc = acc - L[i, k] * L[j, k].conjugate()
            L[i, j] = acc / ljj
    return out


def forward_sub(L_, b_):
    cdef const double complex[:, ::1] L = np.ascontiguousarray(L_, dtype=np.complex128)
    cdef const double complex[::1] b = np.ascontiguousarray(b_, dtype=np.complex128)
    cdef Py_ssize_t n = L.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] y = out
    cdef Py_ssize_t i, k
    cdef double complex acc
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc = acc - L[i, k] * y[k]
        y[i] = acc / L[i, i]
    return out


def back_sub(L_, y_):
    cdef const double complex[:, ::1] L = np.ascontiguousarray(L_, dtype=np.complex128)
    cdef const double complex[::1] y = np.ascontiguousarray(y_, dtype=np.complex128)
    cdef Py_ssize_t n = L.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] x = out
    cdef Py_ssize_t i, k
    cdef double complex acc
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc = acc - L[k, i].conjugate() * x[k]
        x[i] = acc / L[i, i].conjugate()
    return out


def cho_solve(L, b):
    return back_sub(L, forward_sub(L, b))


def jacobi_svd(X):
    """One-sided Jacobi SVD; see ``_pykernels.jacobi_svd``."""
    # column-major working copies so each column is contiguous
    Uarr = np.array(X, dtype=np.float64, order="F", copy=True)
    cdef double[::1, :] U = Uarr
    cdef Py_ssize_t p = U.shape[0]
    cdef Py_ssize_t q = U.shape[1]
    Varr = np.asfortranarray(np.eye(q))
    cdef double[::1, :] V = Varr
    cdef double tiny = (np.finfo(float).tiny / JACOBI_TOL) + (JACOBI_TOL * np.linalg.norm(Uarr)) ** 2
    cdef Py_ssize_t i, j, r, sweep
    cdef double alpha, beta, gamma, zeta, t, c, s, a, bb
    cdef bint rotated
    for sweep in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(q - 1):
            for j in range(i + 1, q):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for r in range(p):
                    alpha += U[r, i] * U[r, i]
                    beta += U[r, j] * U[r, j]
                    gamma += U[r, i] * U[r, j]
                if alpha <= tiny or beta <= tiny:
                    continue
                if fabs(gamma) <= JACOBI_TOL * sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for r in range(p):
                    a = U[r, i]
                    bb = U[r, j]
                    U[r, i] = c * a - s * bb
                    U[r, j] = s * a + c * bb
                for r in range(q):
                    a = V[r, i]
                    bb = V[r, j]
                    V[r, i] = c * a - s * bb
                    V[r, j] = s * a + c * bb
        if not rotated:
            break
    sv = np.sqrt(np.einsum("ij,ij->j", Uarr, Uarr))
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    Uo = np.ascontiguousarray(Uarr[:, order])
    Vo = np.ascontiguousarray(Varr[:, order])
    nz = sv > 0
    Uo[:, nz] /= sv[nz]
    Uo[:, ~nz] = 0.0
    return Uo, sv, Vo


def prox_amplitude(z_, b_):
    cdef const double complex[::1] z = np.ascontiguousarray(z_, dtype=np.complex128)
    cdef const double[::1] b = np.ascontiguousarray(b_, dtype=np.float64)
    cdef Py_ssize_t m = z.shape[0]
    out = np.zeros(m, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t i
    cdef double mod, re, im
    for i in range(m):
        re = z[i].real
        im = z[i].imag
        mod = hypot(re, im)
        if mod > 0.0:
            o[i] = b[i] * (re / mod) + 1j * (b[i] * (im / mod))
    return out
