"""Cholesky factorization, factored solves and matrix-free conjugate gradient."""
import numpy as np

from gpspr import kernels
from gpspr.errors import BreakdownError, ConvergenceError, DimensionError

CG_TOL = 1e-8
CG_MAX_ITER = 500


def cholesky(M):
    """Lower-triangular ``L`` with positive real diagonal and ``L L^* = M``.

    Raises:
        NotPositiveDefiniteError: a pivot is not strictly positive.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return kernels.cholesky(M)


def solve_factored(L, rhs):
    """Solve ``(L L^*) x = rhs`` by forward then backward substitution."""
    rhs = np.asarray(rhs, dtype=np.complex128)
    if rhs.shape != (L.shape[0],):
        raise DimensionError(f"rhs must have length {L.shape[0]}, got shape {rhs.shape}")
    return kernels.cho_solve(L, rhs)


def conjugate_gradient(apply, rhs, tol=CG_TOL, max_iter=CG_MAX_ITER, x0=None):
    """Solve ``apply(x) = rhs`` for a Hermitian positive-definite ``apply``.

    Returns ``(x, iterations)`` once ``||apply(x) - rhs|| <= tol * ||rhs||``.

    Raises:
        BreakdownError: a search direction has non-positive curvature.
        ConvergenceError: ``max_iter`` reached; carries the final relative
            residual and the last iterate as ``.solution``.
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = np.array(x0, dtype=np.complex128)
        r = rhs - apply(x)
    rr = np.vdot(r, r).real
    target = (tol * bnorm) ** 2
    if rr <= target:
        return x, 0
    p = r.copy()
    for k in range(1, max_iter + 1):
        ap = apply(p)
        curv = np.vdot(p, ap).real
        if not curv > 0.0:
            raise BreakdownError(f"zero-curvature direction at CG iteration {k}")
        alpha = rr / curv
        x = x + alpha * p
        r = r - alpha * ap
        rr_new = np.vdot(r, r).real
        if rr_new <= target:
            return x, k
        p = r + (rr_new / rr) * p
        rr = rr_new
    err = ConvergenceError(
        f"CG did not converge in {max_iter} iterations (relative residual "
        f"{np.sqrt(rr) / bnorm:.3e})",
        residual=float(np.sqrt(rr) / bnorm),
        iterations=max_iter,
    )
    err.solution = x
    raise err
