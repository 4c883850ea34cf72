"""Exact and relaxed projections onto the graph set ``{(x, y) : A^* x = y}``.

The tall branch (``m >= n``) factors ``I + A A^*``, the wide branch factors
``I + A^* A``; scaled isometries (``A A^* = l I``) need no factor at all.
Each projection costs one pair of triangular solves plus matrix-vector
products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gpspr import kernels
from gpspr.errors import (
    ConfigurationError,
    DimensionError,
    FactorizationError,
    NotPositiveDefiniteError,
)
from gpspr.linalg import CG_MAX_ITER, CG_TOL, conjugate_gradient

BRANCHES = ("tall", "wide", "isometric")
RANGE_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GraphProjector:
    ensemble: object
    branch: str
    factor: np.ndarray | None = None
    scale: float | None = None

    @property
    def n(self):
        return self.ensemble.n

    @property
    def m(self):
        return self.ensemble.m


def _factor(M, what):
    if not np.all(np.isfinite(M)):
        raise FactorizationError(f"{what} has non-finite entries")
    try:
        L = kernels.cholesky(M)
    except NotPositiveDefiniteError as exc:
        raise FactorizationError(f"cannot factor {what}: {exc}") from exc
    L.setflags(write=False)
    return L


def build(ensemble, branch=None):
    """Precompute the projector for ``ensemble``.

    ``branch`` overrides the automatic choice (isometric when the structure
    says so, tall when ``m >= n``, wide otherwise).
    """
    if branch is None:
        if ensemble.is_isometric:
            branch = "isometric"
        elif ensemble.m >= ensemble.n:
            branch = "tall"
        else:
            branch = "wide"
    if branch not in BRANCHES:
        raise ConfigurationError(f"unknown branch {branch!r}")
    if branch == "isometric":
        if not ensemble.is_isometric:
            raise ConfigurationError("isometric branch needs a scaled-isometric ensemble")
        return GraphProjector(ensemble, "isometric", scale=float(ensemble.scale))
    a = ensemble.dense()
    if branch == "tall":
        M = np.eye(ensemble.n) + a @ a.conj().T
        return GraphProjector(ensemble, "tall", factor=_factor(M, "I + A A^*"))
    M = np.eye(ensemble.m) + a.conj().T @ a
    return GraphProjector(ensemble, "wide", factor=_factor(M, "I + A^* A"))


def _check(P, c, d):
    c = np.asarray(c, dtype=np.complex128)
    d = np.asarray(d, dtype=np.complex128)
    if c.shape != (P.n,) or d.shape != (P.m,):
        raise DimensionError(
            f"expected c of length {P.n} and d of length {P.m}, got {c.shape} and {d.shape}"
        )
    return c, d


def project(P, c, d):
    """Nearest point ``(x, y)`` with ``A^* x = y`` to ``(c, d)``."""
    c, d = _check(P, c, d)
    ens = P.ensemble
    if P.branch == "wide":
        y = kernels.cho_solve(P.factor, ens.forward(c + ens.adjoint(d)))
        x = c + ens.adjoint(d - y)
        return x, y
    rhs = c + ens.adjoint(d)
    if P.branch == "isometric":
        x = rhs / (P.scale + 1.0)
    else:
        x = kernels.cho_solve(P.factor, rhs)
    return x, ens.forward(x)


def project_relaxed(P, t, c, d):
    """``t (c, d) + (1 - t) project(P, c, d)`` for ``0 <= t < 1``."""
    if not 0.0 <= t < 1.0:
        raise ConfigurationError(f"relaxation t must lie in [0, 1), got {t!r}")
    x, y = project(P, c, d)
    if t == 0.0:
        return x, y
    c, d = _check(P, c, d)
    return t * c + (1.0 - t) * x, t * d + (1.0 - t) * y


class TvOperator:
    """Forward differences on an ``h x w`` grid.

    ``apply`` returns the horizontal differences followed by the vertical
    ones (length ``2 h w``); the last column / last row of each block is zero.
    """

    def __init__(self, h, w):
        if h < 1 or w < 1:
            raise ConfigurationError("grid dimensions must be positive")
        self.h = h
        self.w = w

    @property
    def n(self):
        return self.h * self.w

    def apply(self, x):
        img = np.reshape(x, (self.h, self.w))
        dh = np.zeros_like(img)
        dv = np.zeros_like(img)
        dh[:, :-1] = img[:, 1:] - img[:, :-1]
        dv[:-1, :] = img[1:, :] - img[:-1, :]
        return np.concatenate([dh.ravel(), dv.ravel()])

    def adjoint(self, z):
        n = self.n
        zh = np.reshape(z[:n], (self.h, self.w))
        zv = np.reshape(z[n:], (self.h, self.w))
        out = np.zeros(zh.shape, dtype=np.result_type(zh, zv))
        out[:, 1:] += zh[:, :-1]
        out[:, :-1] -= zh[:, :-1]
        out[1:, :] += zv[:-1, :]
        out[:-1, :] -= zv[:-1, :]
        return out.ravel()

    def gram(self, x):
        return self.adjoint(self.apply(x))

    def dense(self):
        eye = np.eye(self.n)
        return np.stack([self.apply(e) for e in eye], axis=1)


def project_tv(ensemble, D, c, d1, d2, cg_tol=CG_TOL, cg_max=CG_MAX_ITER, x0=None):
    """Project ``(c, d1, d2)`` onto ``{(x, y1, y2) : A^* x = y1, D x = y2}``.

    Solves ``((1 + l) I + D^* D) x = c + A d1 + D^* d2`` by conjugate gradient,
    where ``A A^* = l I``; ``l = 1`` gives the unitary-Fourier system.

    Raises:
        ConvergenceError: CG did not reach ``cg_tol``.
    """
    if not ensemble.is_isometric:
        raise ConfigurationError("TV graph projection needs a scaled-isometric ensemble")
    n, m = ensemble.n, ensemble.m
    c = np.asarray(c, dtype=np.complex128)
    d1 = np.asarray(d1, dtype=np.complex128)
    d2 = np.asarray(d2, dtype=np.complex128)
    if c.shape != (n,) or d1.shape != (m,) or d2.shape != (2 * D.n,) or D.n != n:
        raise DimensionError("block sizes do not match the ensemble and TV operator")
    coef = 1.0 + float(ensemble.scale)

    def normal(v):
        return coef * v + D.gram(v)

    rhs = c + ensemble.adjoint(d1) + D.adjoint(d2)
    x, _ = conjugate_gradient(normal, rhs, tol=cg_tol, max_iter=cg_max, x0=x0)
    return x, ensemble.forward(x), D.apply(x)


@dataclass(frozen=True, eq=False)
class RangeProjector:
    """``A^* (A A^*)^{-1} A``: projection onto the range of ``A^*`` in
    measurement space, used by the single-variable Douglas-Rachford form."""

    ensemble: object
    factor: np.ndarray | None = None
    scale: float | None = None

    def solve(self, v):
        """``(A A^*)^{-1} v``."""
        if self.factor is None:
            return v / self.scale
        return kernels.cho_solve(self.factor, v)

    def recover(self, y):
        """Least-squares ``x = (A A^*)^{-1} A y``."""
        return self.solve(self.ensemble.adjoint(y))

    def apply(self, y):
        return self.ensemble.forward(self.recover(y))


def build_range(ensemble):
    if ensemble.m < ensemble.n:
        raise ConfigurationError("Douglas-Rachford needs m >= n")
    if ensemble.is_isometric:
        return RangeProjector(ensemble, scale=float(ensemble.scale))
    a = ensemble.dense()
    gram = a @ a.conj().T
    L = _factor(gram, "A A^*")
    diag = np.abs(np.diag(L))
    if diag.min() <= RANGE_RANK_TOL * diag.max():
        raise FactorizationError("A A^* is numerically singular")
    return RangeProjector(ensemble, factor=L)
