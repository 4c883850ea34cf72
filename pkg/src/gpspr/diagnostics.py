"""Local-convergence quantities for a given instance and empirical rate fits.

The central object is ``B = C Omega`` with ``C = [L^{-1}, L^{-1} A]``
(``L L^* = I + A A^*``) and ``Omega`` the diagonal of phases of ``x_ref`` and
``A^* x_ref``. ``B B^* = I``, and the singular values of its real form
``[Re B; Im B]`` come in pairs with ``s_i^2 + s_{2n+1-i}^2 = 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from gpspr import kernels
from gpspr.errors import DimensionError, PhaseUndefinedError
from gpspr.model import PriorSpec
from gpspr.projection import project
from gpspr.prox import prox_amplitude, prox_prior

NONZERO_TOL = 1e-10
SIGMA2_WARN = 1e-8


def realify(z):
    """Stack real over imaginary parts: ``G(z) = (Re z; Im z)``."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag]).astype(np.float64)


def complexify(v):
    """Inverse of :func:`realify`."""
    v = np.asarray(v, dtype=np.float64)
    k = v.shape[0] // 2
    return v[:k] + 1j * v[k:]


def realify_matrix(B):
    B = np.asarray(B)
    return np.vstack([B.real, B.imag]).astype(np.float64)


def _phases(v, what, fill_zero_phase):
    mod = np.abs(v)
    zero = mod == 0
    if np.any(zero) and not fill_zero_phase:
        raise PhaseUndefinedError(
            f"{what} has {int(zero.sum())} zero entries; phase is undefined "
            "(pass fill_zero_phase=True to use phase 1 there)"
        )
    out = np.ones(v.shape, dtype=np.complex128)
    out[~zero] = v[~zero] / mod[~zero]
    return out


def _factor_pieces(ensemble):
    a = ensemble.dense()
    n = ensemble.n
    L = kernels.cholesky(np.eye(n) + a @ a.conj().T)
    Linv = np.empty((n, n), dtype=np.complex128)
    eye = np.eye(n, dtype=np.complex128)
    for j in range(n):
        Linv[:, j] = kernels.forward_sub(L, eye[:, j])
    return a, L, Linv


def build_B(ensemble, x_ref, fill_zero_phase=False):
    """Return ``B = [L^{-1}, L^{-1} A] diag(x/|x|, y/|y|)`` with ``y = A^* x``.

    Raises:
        PhaseUndefinedError: ``x_ref`` or ``A^* x_ref`` has a zero entry and
            ``fill_zero_phase`` is off.
    """
    x_ref = np.asarray(x_ref, dtype=np.complex128)
    if x_ref.shape != (ensemble.n,):
        raise DimensionError(f"x_ref must have length {ensemble.n}")
    a, _, Linv = _factor_pieces(ensemble)
    omega = np.concatenate([
        _phases(x_ref, "x_ref", fill_zero_phase),
        _phases(a.conj().T @ x_ref, "A^* x_ref", fill_zero_phase),
    ])
    C = np.hstack([Linv, Linv @ a])
    return C * omega[None, :]


class Spectrum(NamedTuple):
    values: np.ndarray
    left: np.ndarray
    right: np.ndarray


def singular_spectrum(ensemble, x_ref, fill_zero_phase=False, vectors=False):
    """Singular values (descending, ``2n`` of them) of ``[Re B; Im B]``.

    With ``vectors=True`` returns a :class:`Spectrum` whose ``left`` columns
    are the matching left singular vectors in ``R^{2n}``.
    """
    Br = realify_matrix(build_B(ensemble, x_ref, fill_zero_phase))
    # Jacobi on the transpose: X^T V = U S means V holds left vectors of X
    U, s, V = kernels.jacobi_svd(Br.T)
    if vectors:
        return Spectrum(s, V, U)
    return s


def predicted_extreme_vectors(ensemble, x_ref):
    """Unit vectors ``G(L^* x) / ||.||`` and ``G(-i L^* x) / ||.||`` that
    span the singular directions for ``s = 1`` and ``s = 0``."""
    _, L, _ = _factor_pieces(ensemble)
    w = L.conj().T @ np.asarray(x_ref, dtype=np.complex128)
    lead = realify(w)
    trail = realify(-1j * w)
    return lead / np.linalg.norm(lead), trail / np.linalg.norm(trail)


def matrix_singular_values(a, field="complex"):
    """Singular values of a (possibly complex) matrix via one-sided Jacobi.

    Complex matrices use the real embedding ``[[Re, -Im], [Im, Re]]`` whose
    spectrum repeats each value twice; the duplicates are dropped.
    """
    a = np.asarray(a)
    if field == "real" or not np.iscomplexobj(a) or not np.any(a.imag):
        X = np.asarray(a.real, dtype=np.float64)
        if X.shape[0] < X.shape[1]:
            X = X.T
        return kernels.jacobi_svd(X)[1]
    X = np.block([[a.real, -a.imag], [a.imag, a.real]])
    if X.shape[0] < X.shape[1]:
        X = X.T
    return kernels.jacobi_svd(X)[1][::2]


@dataclass
class DiagnosticsReport:
    delta1: float
    delta2: float
    sigma2: float
    beta_tilde: float
    t_max: float
    s_min_A: float
    s_max_A: float
    gamma_fit: float | None = None
    valid: bool = True
    notes: list = field(default_factory=list)

    FIELDS = ("delta1", "delta2", "sigma2", "beta_tilde", "t_max", "s_min_A",
              "s_max_A", "gamma_fit", "valid")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    def csv_header(self):
        return ",".join(self.FIELDS)

    def csv_row(self):
        vals = []
        for name in self.FIELDS:
            v = getattr(self, name)
            vals.append("" if v is None else repr(v))
        return ",".join(vals)

    def lines(self):
        """``key: value`` lines for human display."""
        out = [f"{name}: {getattr(self, name)}" for name in self.FIELDS]
        out.extend(f"note: {n}" for n in self.notes)
        return out


def t_max_from_beta(beta_tilde_sq):
    """Largest admissible relaxation ``2 (1 - b^2) / (2 - b^2)``."""
    return 2.0 * (1.0 - beta_tilde_sq) / (2.0 - beta_tilde_sq)


def contraction_constants(ensemble, x_ref, fill_zero_phase=False):
    """Evaluate the contraction constants and the admissible ``t`` range."""
    x_ref = np.asarray(x_ref, dtype=np.complex128)
    notes = []
    valid = True
    a = ensemble.dense()
    n = ensemble.n
    sv = matrix_singular_values(a, ensemble.field)
    s_max = float(sv[0])
    s_min = float(sv[n - 1]) if sv.shape[0] >= n else 0.0
    if s_min <= NONZERO_TOL * s_max:
        delta1 = 1.0
        valid = False
        notes.append("A is rank deficient: delta1 = 1")
    else:
        delta1 = 1.0 / math.sqrt(1.0 + s_min**2)

    omega_y = _phases(a.conj().T @ x_ref, "A^* x_ref", fill_zero_phase)
    sv_g = kernels.jacobi_svd(realify_matrix(a * omega_y[None, :]))[1]
    nonzero = sv_g[sv_g > NONZERO_TOL * sv_g[0]] if sv_g[0] > 0 else sv_g[:0]
    delta2 = float(nonzero[-1]) / (1.0 + s_max**2) if nonzero.size else 0.0

    spectrum = singular_spectrum(ensemble, x_ref, fill_zero_phase)
    sigma2 = float(spectrum[1]) if spectrum.shape[0] > 1 else 0.0
    if sigma2 >= 1.0 - SIGMA2_WARN:
        valid = False
        notes.append("sigma2 is numerically 1: local uniqueness fails")
    bt2 = max(sigma2**2 + (1.0 - sigma2**2) * delta1**2, sigma2**2)
    t_max = t_max_from_beta(bt2)
    if not t_max > 0:
        valid = False
        notes.append("no admissible relaxation parameter")
    return DiagnosticsReport(
        delta1=float(delta1),
        delta2=float(delta2),
        sigma2=sigma2,
        beta_tilde=math.sqrt(bt2),
        t_max=float(t_max),
        s_min_A=s_min,
        s_max_A=s_max,
        valid=valid,
        notes=notes,
    )


class RateFit(NamedTuple):
    gamma: float
    degenerate: bool
    samples: int


def fit_rate(trace, floor=1e-14, min_records=10):
    """Fit ``rel_err(k) ~ C gamma^k`` over the tail half of a trace.

    Accepts a :class:`~gpspr.solvers.Trace` or a sequence of errors indexed
    from 0. Records at or below ``floor`` are dropped first. A trace that is
    too short, constant, or non-finite is flagged ``degenerate``.
    """
    if hasattr(trace, "rel_errs"):
        iters = np.asarray(trace.iters, dtype=float)
        errs = np.asarray(trace.rel_errs, dtype=float)
    else:
        errs = np.asarray(trace, dtype=float)
        iters = np.arange(errs.shape[0], dtype=float)
    keep = np.isfinite(errs) & (errs > floor)
    iters, errs = iters[keep], errs[keep]
    if errs.shape[0] < min_records:
        return RateFit(math.nan, True, int(errs.shape[0]))
    half = errs.shape[0] // 2
    k = iters[half:]
    logs = np.log(errs[half:])
    slope = np.polyfit(k, logs, 1)[0]
    degenerate = bool(np.ptp(logs) == 0.0)
    return RateFit(float(math.exp(slope)), degenerate, int(k.shape[0]))


def fixed_point_residual(state, projector, instance, prior=None):
    """``|| M(2 prox(z) - z) - prox(z) ||`` at ``z = (x + lam, y + nu)``,
    i.e. how far the equivalent DR variable is from being a fixed point."""
    prior = prior or PriorSpec()
    zx = state.x + state.lam
    zy = state.y + state.nu
    px = prox_prior(zx, prior)
    py = prox_amplitude(zy, instance.amplitudes)
    mx, my = project(projector, 2.0 * px - zx, 2.0 * py - zy)
    return float(math.sqrt(np.linalg.norm(mx - px) ** 2 + np.linalg.norm(my - py) ** 2))
