"""GPS, robust GPS, Douglas-Rachford, robust DR, the three-block TV solver
and an HIO baseline.

GPS iterates on primal ``(x, y)`` and dual ``(lam, nu)`` variables::

    (x', y')   = project_relaxed(t, x - lam, y - nu)          # t = 0 for GPS
    (x+, y+)   = (prox_g(x' + lam), prox_amplitude(y' + nu))
    (lam, nu) += (x' - x+, y' - y+)

DR/RDR work on a single measurement-space vector ``z`` and need ``g = 0``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from gpspr.errors import BreakdownError, ConfigurationError, ConvergenceError
from gpspr.linalg import conjugate_gradient
from gpspr.model import PriorSpec, rel_err, residual
from gpspr.projection import (
    TvOperator,
    build,
    build_range,
    project_relaxed,
    project_tv,
)
from gpspr.prox import prox_amplitude, prox_l1, prox_prior

ALGORITHMS = ("gps", "rgps", "dr", "rdr", "gps_tv", "hio")
STOP_RULES = ("oracle_rel_err", "residual")
STATUSES = ("converged", "max_iters", "error")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "gps"
    t: float = 0.1
    max_iters: int = 5000
    tol: float = 1e-3
    stop_rule: str = "oracle_rel_err"
    tv_weight: float = 0.0
    hio_beta: float = 1.0
    seed: int = 0
    cg_tol: float = 1e-8
    cg_max: int = 500

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.stop_rule not in STOP_RULES:
            raise ConfigurationError(f"unknown stop rule {self.stop_rule!r}")
        if self.algorithm in ("gps", "dr"):
            object.__setattr__(self, "t", 0.0)
        elif self.algorithm in ("rgps", "rdr") and not 0.0 < self.t < 1.0:
            raise ConfigurationError(f"{self.algorithm} needs 0 < t < 1, got {self.t}")
        elif self.algorithm == "gps_tv" and not 0.0 <= self.t < 1.0:
            raise ConfigurationError(f"gps_tv needs 0 <= t < 1, got {self.t}")
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be nonnegative")
        if self.tv_weight < 0:
            raise ConfigurationError("tv_weight must be nonnegative")


@dataclass
class GpsState:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    nu: np.ndarray


@dataclass
class DrState:
    z: np.ndarray
    x: np.ndarray


@dataclass
class TvState:
    x: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    lam: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray


@dataclass
class Trace:
    """Per-iteration records and the terminal status of a run."""

    iters: list = field(default_factory=list)
    rel_errs: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    status: str | None = None
    message: str = ""
    final_state: object = None

    def record(self, it, rel_error, resid, seconds):
        if self.iters and it <= self.iters[-1]:
            raise ValueError("trace iterations must be strictly increasing")
        self.iters.append(int(it))
        self.rel_errs.append(float(rel_error))
        self.residuals.append(float(resid))
        self.seconds.append(float(seconds))

    def finish(self, status, message=""):
        if self.status is not None:
            raise ValueError(f"terminal status already set to {self.status!r}")
        if status not in STATUSES:
            raise ValueError(f"unknown status {status!r}")
        self.status = status
        self.message = message

    @property
    def iterations(self):
        return self.iters[-1] if self.iters else 0

    def __len__(self):
        return len(self.iters)

    def to_csv(self, path, timing=True):
        """Write ``iter,rel_err,residual,seconds``; ``timing=False`` leaves
        the seconds column empty so repeated runs are byte-identical."""
        with open(path, "w") as fh:
            fh.write("iter,rel_err,residual,seconds\n")
            for k, e, r, s in zip(self.iters, self.rel_errs, self.residuals, self.seconds):
                sec = repr(s) if timing else ""
                fh.write(f"{k},{e!r},{r!r},{sec}\n")


def random_start(instance, seed):
    rng = np.random.default_rng(seed)
    n = instance.n
    if instance.ensemble.field == "real":
        return rng.standard_normal(n).astype(np.complex128)
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)


def init_state(instance, config, seed=None, x0=None):
    """Starting state: Gaussian ``x0`` (unless given), ``y0 = A^* x0``, zero duals."""
    if x0 is None:
        x0 = random_start(instance, config.seed if seed is None else seed)
    x0 = np.array(x0, dtype=np.complex128)
    ens = instance.ensemble
    y0 = ens.forward(x0)
    if config.algorithm in ("dr", "rdr"):
        return DrState(z=y0, x=x0)
    if config.algorithm == "gps_tv":
        D = tv_operator_for(ens)
        y2 = D.apply(x0)
        return TvState(x0, y0, y2, np.zeros_like(x0), np.zeros_like(y0), np.zeros_like(y2))
    return GpsState(x0, y0, np.zeros_like(x0), np.zeros_like(y0))


def _gps_update(state, projector, b, prior, t):
    xh, yh = project_relaxed(projector, t, state.x - state.lam, state.y - state.nu)
    x1 = prox_prior(xh + state.lam, prior)
    y1 = prox_amplitude(yh + state.nu, b)
    lam = state.lam + xh - x1
    nu = state.nu + yh - y1
    return GpsState(x1, y1, lam, nu)


def gps_step(state, projector, instance, prior=None):
    return _gps_update(state, projector, instance.amplitudes, prior or PriorSpec(), 0.0)


def rgps_step(state, projector, instance, prior=None, t=0.1):
    return _gps_update(state, projector, instance.amplitudes, prior or PriorSpec(), t)


def rdr_step(z, range_projector, b, t):
    """Relaxed DR in measurement space; ``t = 0`` is plain DR."""
    p = prox_amplitude(z, b)
    r = 2.0 * p - z
    pr = range_projector.apply(r)
    if t != 0.0:
        pr = t * r + (1.0 - t) * pr
    return z + pr - p


def dr_step(z, range_projector, b):
    return rdr_step(z, range_projector, b, 0.0)


def recover_x(z, range_projector, b):
    return range_projector.recover(prox_amplitude(z, b))


def stacked_dr_step(x_dr, y_dr, projector, b, prior=None, t=0.0):
    """One DR step on the stacked variable ``z_DR = (x + lam, y + nu)``.

    Generates the same ``x`` sequence as GPS via ``x = prox_g(x_dr)``.
    """
    prior = prior or PriorSpec()
    px = prox_prior(x_dr, prior)
    py = prox_amplitude(y_dr, b)
    mx, my = project_relaxed(projector, t, 2.0 * px - x_dr, 2.0 * py - y_dr)
    return x_dr + mx - px, y_dr + my - py


def tv_operator_for(ensemble):
    if ensemble.image_shape is None:
        raise ConfigurationError("gps_tv needs an ensemble defined on an image grid")
    return TvOperator(*ensemble.grid_shape)


def gps_tv_step(state, D, instance, prior=None, t=0.1, tv_weight=0.0, cg_tol=1e-8, cg_max=500):
    """Relaxed three-block GPS step for ``f1(y1) + tv_weight ||y2||_1 + g(x)``
    subject to ``A^* x = y1`` and ``D x = y2``.

    ``D=None`` drops the TV block (two-block RGPS through the same CG path).
    """
    prior = prior or PriorSpec()
    ens = instance.ensemble
    c = state.x - state.lam
    d1 = state.y1 - state.nu1
    if D is None:
        # CG on a multiple of the identity keeps the same code path as TV
        coef = 1.0 + float(ens.scale)
        x, _ = conjugate_gradient(
            lambda v: coef * v, c + ens.adjoint(d1), tol=cg_tol, max_iter=cg_max
        )
        y1, y2, d2 = ens.forward(x), state.y2, state.y2
    else:
        d2 = state.y2 - state.nu2
        x, y1, y2 = project_tv(ens, D, c, d1, d2, cg_tol=cg_tol, cg_max=cg_max, x0=state.x)
    if t != 0.0:
        x = t * c + (1.0 - t) * x
        y1 = t * d1 + (1.0 - t) * y1
        if D is not None:
            y2 = t * d2 + (1.0 - t) * y2
    x_new = prox_prior(x + state.lam, prior)
    y1_new = prox_amplitude(y1 + state.nu1, instance.amplitudes)
    lam = state.lam + x - x_new
    nu1 = state.nu1 + y1 - y1_new
    if D is None:
        return TvState(x_new, y1_new, state.y2, lam, nu1, state.nu2)
    v2 = y2 + state.nu2
    y2_new = prox_l1(v2, tv_weight) if tv_weight > 0 else v2
    nu2 = state.nu2 + y2 - y2_new
    return TvState(x_new, y1_new, y2_new, lam, nu1, nu2)


def hio_update(x, ensemble, b, support, beta):
    """One Fienup HIO step for a real nonnegative image on ``support``.

    Returns ``(x_next, x_fourier)`` where ``x_fourier`` is the Fourier-modulus
    projection of ``x``.
    """
    xp = ensemble.adjoint(prox_amplitude(ensemble.forward(x), b)).real / ensemble.scale
    ok = support & (xp >= 0)
    return np.where(ok, xp, x - beta * xp), xp


def hio_estimate(xp, support):
    return np.where(support & (xp >= 0), xp, 0.0)


def run_hio(ensemble, b, support_mask, beta=1.0, iters=1000, seed=0, x0=None, trace=None, truth=None):
    """Classic hybrid input-output for Fourier magnitudes with a support,
    realness and nonnegativity constraint. Returns the constrained estimate."""
    if not ensemble.is_isometric:
        raise ConfigurationError("HIO needs a scaled-isometric (Fourier) ensemble")
    support = np.asarray(support_mask, dtype=bool)
    b = np.asarray(b, dtype=np.float64)
    if x0 is None:
        rng = np.random.default_rng(seed)
        x = np.zeros(ensemble.n)
        x[support] = rng.random(int(support.sum()))
    else:
        x = np.array(x0, dtype=np.complex128).real.copy()
    start = time.perf_counter()
    if trace is not None:
        _record(trace, 0, hio_estimate(x, support), ensemble, b, truth, start)
    xp = x
    for k in range(1, iters + 1):
        x, xp = hio_update(x, ensemble, b, support, beta)
        if trace is not None:
            _record(trace, k, hio_estimate(xp, support), ensemble, b, truth, start)
    if iters == 0:
        return hio_estimate(x, support).astype(np.complex128)
    return hio_estimate(xp, support).astype(np.complex128)


def _record(trace, k, x, ensemble, b, truth, start):
    err = rel_err(x, truth) if truth is not None else math.nan
    trace.record(k, err, residual(ensemble, x, b), time.perf_counter() - start)


def _check_combination(instance, config, prior):
    algo = config.algorithm
    if algo in ("dr", "rdr"):
        if prior.variant != "none":
            raise ConfigurationError(f"{algo} supports only g = 0 (prior 'none')")
        if instance.m < instance.n:
            raise ConfigurationError(f"{algo} needs m >= n")
    if algo in ("gps_tv", "hio") and not instance.ensemble.is_isometric:
        raise ConfigurationError(f"{algo} needs a scaled-isometric ensemble")
    if config.stop_rule == "oracle_rel_err" and instance.truth is None:
        raise ConfigurationError("oracle_rel_err stopping needs a ground-truth signal")
    prior.check(instance.n)


def run(instance, config, prior=None, x0=None, state=None):
    """Iterate ``config.algorithm`` until the stop metric drops below
    ``config.tol`` or ``config.max_iters`` steps have been taken.

    Returns ``(x, trace)``. Iteration 0 (the starting point) is recorded.
    Numerical failures inside the loop end the run with status ``error``.
    """
    prior = prior or PriorSpec()
    _check_combination(instance, config, prior)
    ens = instance.ensemble
    b = instance.amplitudes
    truth = instance.truth
    trace = Trace()
    start = time.perf_counter()

    def metric(x):
        err = rel_err(x, truth) if truth is not None else math.nan
        res = residual(ens, x, b)
        return err, res

    if config.algorithm == "hio":
        support = prior.support_mask if prior.support_mask is not None else ens.support_mask()
        x = run_hio(ens, b, support, beta=config.hio_beta, iters=config.max_iters,
                    seed=config.seed, x0=x0, trace=trace, truth=truth)
        trace.finish("max_iters")
        return x, trace

    if state is None:
        state = init_state(instance, config, x0=x0)
    algo = config.algorithm
    if algo in ("dr", "rdr"):
        proj = build_range(ens)
        state = DrState(state.z, recover_x(state.z, proj, b) if x0 is None else state.x)
    elif algo == "gps_tv":
        proj = tv_operator_for(ens)
    else:
        proj = build(ens)

    err, res = metric(state.x)
    trace.record(0, err, res, time.perf_counter() - start)
    status = "max_iters"
    try:
        for k in range(1, config.max_iters + 1):
            if algo in ("gps", "rgps"):
                state = _gps_update(state, proj, b, prior, config.t)
            elif algo in ("dr", "rdr"):
                z = rdr_step(state.z, proj, b, config.t)
                state = DrState(z, recover_x(z, proj, b))
            else:
                state = gps_tv_step(state, proj, instance, prior, config.t, config.tv_weight,
                                    config.cg_tol, config.cg_max)
            err, res = metric(state.x)
            trace.record(k, err, res, time.perf_counter() - start)
            value = err if config.stop_rule == "oracle_rel_err" else res
            if value < config.tol:
                status = "converged"
                break
    except (ConvergenceError, BreakdownError, FloatingPointError) as exc:
        trace.final_state = state
        trace.finish("error", str(exc))
        return state.x, trace
    trace.final_state = state
    trace.finish(status)
    return state.x, trace
