"""Monte-Carlo harnesses: phase transition, noise sweep, sparse recovery and
TV refinement of HIO reconstructions.

Every trial draws its randomness from ``derive_seed(base_seed, *key)`` so a
single cell can be rerun on its own, and the same instance is shared by all
algorithms in a cell. Trials run in a process pool when ``threads > 1``;
results are gathered in task order, so serial and parallel runs match.
"""
from __future__ import annotations

import csv
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gpspr.errors import ConfigurationError, GpsprError
from gpspr.model import (
    FIELDS,
    PriorSpec,
    ProblemInstance,
    SamplingEnsemble,
    add_noise,
    gen_gaussian,
    gen_oversampled_fourier,
    measure,
    rel_err,
)
from gpspr.solvers import SolverConfig, run, run_hio

SUCCESS_TOL = 1e-3
NOISE_MAX_ITERS = 200
TV_WEIGHT = 0.1


def _key_word(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    if isinstance(part, float):
        return zlib.crc32(repr(part).encode())
    return int(part)


def derive_seed(base_seed, *key):
    """Deterministic 63-bit seed for ``key`` (ints, floats or strings)."""
    entropy = [int(base_seed)] + [_key_word(k) for k in key]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict, compare=False)

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, table has {len(self.columns)} columns")
        self.rows.append(tuple(row))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self):
        return [dict(zip(self.columns, r)) for r in self.rows]

    def __len__(self):
        return len(self.rows)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(s):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def emit(table, path, fmt="csv"):
    """Write ``table`` as CSV (header row) or JSON lines (one object per row)."""
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_fmt(v) for v in row])
    elif fmt in ("jsonl", "json-lines"):
        with open(path, "w") as fh:
            for rec in table.records():
                fh.write(json.dumps(rec) + "\n")
    else:
        raise ConfigurationError(f"unknown output format {fmt!r}")


def read_table(path, fmt="csv", columns=None):
    """Inverse of :func:`emit`. JSON-lines files need ``columns`` when empty."""
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            return Table(header, [tuple(_parse(v) for v in row) for row in reader])
    if fmt in ("jsonl", "json-lines"):
        with open(path) as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        if not recs and columns is None:
            raise ConfigurationError("empty json-lines file needs explicit columns")
        cols = tuple(columns) if columns is not None else tuple(recs[0])
        return Table(cols, [tuple(r[c] for c in cols) for r in recs])
    raise ConfigurationError(f"unknown output format {fmt!r}")


def _map(fn, tasks, threads=1):
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


@dataclass(frozen=True)
class ExperimentGrid:
    n: int
    m_ratios: tuple
    trials: int
    algorithms: tuple = ("gps", "rgps")
    field: str = "real"
    snr_list: tuple | None = None
    base_seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be positive")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if not self.m_ratios or any(not r > 0 for r in self.m_ratios):
            raise ConfigurationError("ratios must be positive")
        if self.field not in FIELDS:
            raise ConfigurationError(f"unknown field {self.field!r}")
        if not self.algorithms:
            raise ConfigurationError("at least one algorithm is required")

    def m_for(self, ratio):
        return max(1, int(round(ratio * self.n)))


def _gaussian_trial(field_, n, m, trial, base_seed):
    inst = gen_gaussian(n, m, field_, derive_seed(base_seed, "instance", field_, n, m, trial))
    init = derive_seed(base_seed, "init", field_, n, m, trial)
    return inst, init


def _pt_task(task):
    field_, n, m, algo, trial, base_seed, max_iters, t = task
    inst, init = _gaussian_trial(field_, n, m, trial, base_seed)
    cfg = SolverConfig(algorithm=algo, t=t, max_iters=max_iters, tol=SUCCESS_TOL, seed=init)
    try:
        _, trace = run(inst, cfg)
    except GpsprError as exc:
        return False, max_iters, f"{type(exc).__name__}: {exc}"
    ok = trace.status == "converged"
    return ok, trace.iterations, "" if ok else trace.status


def phase_transition(grid, max_iters=5000, t=0.1, threads=1):
    """Success rate and iteration counts over ``ratio x algorithm`` cells.

    A trial succeeds when the phase-aligned error drops below 1e-3 within
    ``max_iters``. Failed trials count toward ``trials`` and their reason is
    kept in ``table.meta["failures"]``.
    """
    cells = [(r, a) for r in grid.m_ratios for a in grid.algorithms]
    tasks = [
        (grid.field, grid.n, grid.m_for(r), a, k, grid.base_seed, max_iters, t)
        for r, a in cells
        for k in range(grid.trials)
    ]
    results = _map(_pt_task, tasks, threads)
    table = Table(("field", "algorithm", "n", "m", "ratio", "trials",
                   "success_rate", "mean_iters", "median_iters"))
    failures = []
    for ci, (ratio, algo) in enumerate(cells):
        chunk = results[ci * grid.trials:(ci + 1) * grid.trials]
        iters = np.array([c[1] for c in chunk], dtype=float)
        wins = sum(c[0] for c in chunk)
        for k, c in enumerate(chunk):
            if not c[0]:
                failures.append((algo, float(ratio), k, c[2]))
        table.append((grid.field, algo, grid.n, grid.m_for(ratio), float(ratio), grid.trials,
                      wins / grid.trials, float(iters.mean()), float(np.median(iters))))
    table.meta["failures"] = failures
    return table


def _noise_task(task):
    field_, n, m, algo, snr, trial, base_seed, max_iters, t = task
    inst, init = _gaussian_trial(field_, n, m, trial, base_seed)
    noisy = add_noise(inst, snr, derive_seed(base_seed, "noise", field_, n, m, float(snr), trial))
    # tol 0: every run uses the full iteration budget
    cfg = SolverConfig(algorithm=algo, t=t, max_iters=max_iters, tol=0.0, seed=init)
    try:
        x, _ = run(noisy, cfg)
    except GpsprError:
        return math.nan
    return rel_err(x, inst.truth)


def noise_sweep(grid, max_iters=NOISE_MAX_ITERS, t=0.1, threads=1):
    """Median terminal error (dB) per ``snr x algorithm`` for each ratio."""
    if not grid.snr_list:
        raise ConfigurationError("noise sweep needs a nonempty snr list")
    cells = [(r, s, a) for r in grid.m_ratios for s in grid.snr_list for a in grid.algorithms]
    tasks = [
        (grid.field, grid.n, grid.m_for(r), a, float(s), k, grid.base_seed, max_iters, t)
        for r, s, a in cells
        for k in range(grid.trials)
    ]
    results = _map(_noise_task, tasks, threads)
    table = Table(("field", "algorithm", "n", "m", "snr_db", "median_rel_err_db"))
    per_trial = {}
    for ci, (ratio, snr, algo) in enumerate(cells):
        errs = np.array(results[ci * grid.trials:(ci + 1) * grid.trials])
        per_trial[(algo, grid.m_for(ratio), float(snr))] = errs
        med = float(np.median(errs))
        db = 20.0 * math.log10(med) if med > 0 else -math.inf
        table.append((grid.field, algo, grid.n, grid.m_for(ratio), float(snr), db))
    table.meta["errors"] = per_trial
    return table


def sparse_instance(n, s, seed):
    """Real Gaussian ``n x n`` instance with an ``s``-sparse nonnegative truth
    supported in the first ``n // 2`` entries."""
    rng = np.random.default_rng(seed)
    half = n // 2
    if s > half:
        raise ConfigurationError(f"sparsity {s} exceeds the known support size {half}")
    a = rng.standard_normal((n, n)).astype(np.complex128)
    truth = np.zeros(n, dtype=np.complex128)
    idx = rng.choice(half, size=s, replace=False)
    truth[idx] = np.abs(rng.standard_normal(s))
    ens = SamplingEnsemble(a, field="real")
    return ProblemInstance(ens, measure(ens, truth), truth=truth, seed=seed)


def _sparse_task(task):
    n, s, p, variant, trial, base_seed, max_iters = task
    inst = sparse_instance(n, s, derive_seed(base_seed, "sparse", n, s, trial))
    support = np.zeros(n, dtype=bool)
    support[: n // 2] = True
    if variant == "l1":
        prior = PriorSpec.soft_threshold(p, support_mask=support)
    else:
        prior = PriorSpec.hard_threshold(s, support_mask=support)
    init = derive_seed(base_seed, "init", n, s, trial)
    cfg = SolverConfig(algorithm="gps", max_iters=max_iters, tol=SUCCESS_TOL, seed=init)
    try:
        _, trace = run(inst, cfg, prior)
    except GpsprError:
        return False, max_iters
    return trace.status == "converged", trace.iterations


def sparse_experiment(n, sparsity_list, p_list=None, trials=10, variant="l1", base_seed=0,
                      max_iters=5000, threads=1):
    """GPS with a known support and an l1 (soft threshold ``p``) or l0 (keep
    ``s`` entries) prior, ``m = n``.

    ``p_list`` defaults to ``p = s``. For l0 the ``p`` column repeats ``s``.
    ``s = 0`` is reported as rate 1 with 0 iterations without running.
    """
    if variant not in ("l1", "l0"):
        raise ConfigurationError(f"unknown sparse variant {variant!r}")
    sparsity_list = list(sparsity_list)
    if p_list is None:
        p_list = [float(s) for s in sparsity_list]
    if len(p_list) != len(sparsity_list):
        raise ConfigurationError("p_list and sparsity_list must have equal length")
    if variant == "l1" and any(not p > 0 for s, p in zip(sparsity_list, p_list) if s > 0):
        raise ConfigurationError("l1 thresholds must be positive")
    tasks = []
    for s, p in zip(sparsity_list, p_list):
        if s > 0:
            tasks.extend((n, s, p, variant, k, base_seed, max_iters) for k in range(trials))
    results = iter(_map(_sparse_task, tasks, threads))
    table = Table(("variant", "n", "s", "p", "rate", "mean_iters"))
    for s, p in zip(sparsity_list, p_list):
        p_col = float(p) if variant == "l1" else float(s)
        if s == 0:
            table.append((variant, n, 0, p_col, 1.0, 0.0))
            continue
        chunk = [next(results) for _ in range(trials)]
        rate = sum(c[0] for c in chunk) / trials
        table.append((variant, n, s, p_col, rate, float(np.mean([c[1] for c in chunk]))))
    return table


def piecewise_constant(h, w, blocks=3, seed=0, background=0.5):
    """Nonnegative ``h x w`` phantom: a constant background plus ``blocks``
    random axis-aligned rectangles with random levels."""
    rng = np.random.default_rng(seed)
    img = np.full((h, w), float(background))
    for _ in range(blocks):
        r0, r1 = np.sort(rng.choice(h + 1, size=2, replace=False))
        c0, c1 = np.sort(rng.choice(w + 1, size=2, replace=False))
        img[r0:r1, c0:c1] += rng.uniform(0.5, 1.5)
    return img


def embed(img, grid_shape):
    out = np.zeros(grid_shape)
    out[: img.shape[0], : img.shape[1]] = img
    return out


def align(x, truth):
    """Phase-aligned relative error of ``x`` against ``truth`` (both on the
    same 2-D grid), minimized over the four mirror states and all circular
    shifts. Returns ``(error, aligned_x)``."""
    x = np.asarray(x, dtype=np.complex128)
    truth = np.asarray(truth, dtype=np.complex128)
    ft = np.fft.fft2(truth)
    best = (math.inf, x)
    for cand in (x, x[::-1, :], x[:, ::-1], x[::-1, ::-1]):
        # |corr[s]| = |sum_r conj(truth[r]) cand[r + s]|
        corr = np.fft.ifft2(np.conj(ft) * np.fft.fft2(cand))
        shift = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
        moved = np.roll(cand, (-shift[0], -shift[1]), axis=(0, 1))
        err = rel_err(moved.ravel(), truth.ravel())
        if err < best[0]:
            best = (err, moved)
    return best


def tv_trial(h, w, snr_db, trial, base_seed=0, pad=2, hio_iters=1000, tv_steps=30, t=0.1,
             tv_weight=TV_WEIGHT, blocks=3, phantom=None):
    """One HIO run followed by ``tv_steps`` relaxed TV-GPS steps.

    Returns ``(err_hio, err_refined)`` after mirror/shift alignment.
    """
    ens = gen_oversampled_fourier(h, w, pad, normalized=True)
    if phantom is None:
        phantom = piecewise_constant(h, w, blocks, derive_seed(base_seed, "phantom", h, w, trial))
    grid = ens.grid_shape
    truth = embed(phantom, grid).ravel().astype(np.complex128)
    inst = ProblemInstance(ens, measure(ens, truth), truth=truth)
    if math.isfinite(snr_db):
        inst = add_noise(inst, snr_db, derive_seed(base_seed, "noise", h, w, float(snr_db), trial))
    support = ens.support_mask()
    x_hio = run_hio(ens, inst.amplitudes, support, beta=1.0, iters=hio_iters,
                    seed=derive_seed(base_seed, "hio", h, w, float(snr_db), trial))
    prior = PriorSpec.indicator(support_mask=support, real_valued=True, nonnegative=True)
    cfg = SolverConfig(algorithm="gps_tv", t=t, max_iters=tv_steps, tol=0.0,
                       stop_rule="residual", tv_weight=tv_weight)
    x_ref, _ = run(inst, cfg, prior, x0=x_hio)
    truth_img = truth.reshape(grid)
    err_hio = align(x_hio.reshape(grid), truth_img)[0]
    err_ref = align(x_ref.reshape(grid), truth_img)[0]
    return err_hio, err_ref


def _tv_task(task):
    return tv_trial(*task[:5], **task[5])


def tv_experiment(h=16, w=16, snr_list=(math.inf, 30.0), trials=10, base_seed=0, threads=1,
                  **options):
    """Median aligned errors of HIO and HIO + TV-GPS per SNR level.

    Per-trial pairs are kept in ``table.meta["trials"]`` keyed by SNR.
    """
    tasks = [(h, w, float(s), k, base_seed, options) for s in snr_list for k in range(trials)]
    results = _map(_tv_task, tasks, threads)
    table = Table(("h", "w", "snr_db", "err_hio", "err_hio_rgps"))
    table.meta["trials"] = {}
    for i, s in enumerate(snr_list):
        chunk = results[i * trials:(i + 1) * trials]
        table.meta["trials"][float(s)] = chunk
        table.append((h, w, float(s), float(np.median([c[0] for c in chunk])),
                      float(np.median([c[1] for c in chunk]))))
    return table
