"""Pure-Python (numpy-vectorized) implementations of the hot kernels.

Same call signatures as the compiled ``_ckernels`` module. Used when the
extension is not built, or when ``GPSPR_BACKEND=python`` is set.
"""
import numpy as np

from gpspr.errors import NotPositiveDefiniteError

JACOBI_TOL = 1e-15
JACOBI_MAX_SWEEPS = 80


def cholesky(M):
    M = np.asarray(M, dtype=np.complex128)
    n = M.shape[0]
    L = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        row = L[j, :j]
        d = M[j, j].real - np.vdot(row, row).real
        if not d > 0.0:
            raise NotPositiveDefiniteError(f"non-positive pivot {d!r} at column {j}")
        ljj = np.sqrt(d)
        L[j, j] = ljj
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ row.conj()) / ljj
    return L


def forward_sub(L, b):
    """Solve ``L y = b`` for lower-triangular ``L``."""
    n = L.shape[0]
    y = np.empty(n, dtype=np.complex128)
    for i in range(n):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def back_sub(L, y):
    """Solve ``L^* x = y`` using the lower-triangular factor ``L``."""
    n = L.shape[0]
    x = np.empty(n, dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - np.conj(L[i + 1:, i]) @ x[i + 1:]) / np.conj(L[i, i])
    return x


def cho_solve(L, b):
    b = np.asarray(b, dtype=np.complex128)
    return back_sub(L, forward_sub(L, b))


def jacobi_svd(X):
    """One-sided (Hestenes) Jacobi SVD of a real ``p x q`` matrix.

    Returns ``(U, s, V)`` with ``X = U @ diag(s) @ V.T``, singular values
    sorted in descending order. ``V`` is always a full orthogonal ``q x q``
    matrix; columns of ``U`` belonging to zero singular values are zero.
    """
    U = np.array(X, dtype=np.float64, copy=True)
    q = U.shape[1]
    V = np.eye(q)
    tiny = (np.finfo(float).tiny / JACOBI_TOL) + (JACOBI_TOL * np.linalg.norm(U)) ** 2
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(q - 1):
            for j in range(i + 1, q):
                ui = U[:, i]
                uj = U[:, j]
                alpha = ui @ ui
                beta = uj @ uj
                gamma = ui @ uj
                if alpha <= tiny or beta <= tiny:
                    continue
                if abs(gamma) <= JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_i = c * ui - s * uj
                U[:, j] = s * ui + c * uj
                U[:, i] = new_i
                vi = V[:, i].copy()
                V[:, i] = c * vi - s * V[:, j]
                V[:, j] = s * vi + c * V[:, j]
        if not rotated:
            break
    sv = np.sqrt(np.einsum("ij,ij->j", U, U))
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    U = U[:, order]
    V = V[:, order]
    nz = sv > 0
    U[:, nz] /= sv[nz]
    U[:, ~nz] = 0.0
    return U, sv, V


def prox_amplitude(z, b):
    z = np.asarray(z, dtype=np.complex128)
    b = np.asarray(b, dtype=np.float64)
    mod = np.abs(z)
    out = np.zeros_like(z)
    nz = mod > 0
    out[nz] = b[nz] * (z[nz] / mod[nz])
    return out
