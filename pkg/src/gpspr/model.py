"""Problem construction: sampling ensembles, signals, noise, priors and
error metrics.

Conventions: ``A`` is stored as an ``n x m`` complex matrix whose column ``i``
is the sampling vector ``a_i``; measurements are ``|A^* x|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from gpspr.errors import ConfigurationError, DimensionError

FIELDS = ("real", "complex")
STRUCTURES = ("generic", "scaled_isometric", "oversampled_fourier")
MAX_FOURIER_SIZE = 1 << 26

RANK_TOL = 1e-10
ISOMETRY_TOL = 1e-10


def _as_vector(x, length, name):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.shape[0] != length:
        raise DimensionError(f"{name} must have length {length}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class SamplingEnsemble:
    """Measurement operator ``A^*`` with a structure tag.

    Dense ensembles store ``a_matrix``. Oversampled-Fourier ensembles are
    matrix-free: ``forward`` is the 2-D DFT over the padded grid and
    ``a_matrix`` is ``None`` (use :meth:`dense` for small grids).

    Attributes:
        a_matrix: ``n x m`` complex matrix, column ``i`` is ``a_i``.
        structure: one of ``generic``, ``scaled_isometric``,
            ``oversampled_fourier``.
        scale: ``l`` with ``A A^* = l I`` for the isometric structures.
        field: ``real`` or ``complex``.
        image_shape: ``(height, width)`` of the unpadded image (Fourier only).
        pad_factor: oversampling factor per axis (Fourier only).
        normalized: use the unitary DFT (``l = 1``) instead of the raw DFT.
    """

    a_matrix: np.ndarray | None
    structure: str = "generic"
    scale: float | None = None
    field: str = "complex"
    image_shape: tuple[int, int] | None = None
    pad_factor: int = 1
    normalized: bool = False

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ConfigurationError(f"unknown structure {self.structure!r}")
        if self.field not in FIELDS:
            raise ConfigurationError(f"unknown field {self.field!r}")
        if self.a_matrix is not None:
            a = np.array(self.a_matrix, dtype=np.complex128)
            if a.ndim != 2:
                raise DimensionError("a_matrix must be two-dimensional")
            a.setflags(write=False)
            object.__setattr__(self, "a_matrix", a)
        elif self.structure != "oversampled_fourier":
            raise ConfigurationError("only oversampled_fourier ensembles may omit a_matrix")
        if self.structure != "generic" and not (self.scale and self.scale > 0):
            raise ConfigurationError("isometric structures need a positive scale")

    @classmethod
    def from_matrix(cls, a, *, field=None, scale=None):
        """Wrap a dense ``n x m`` matrix, tagging it scaled-isometric when
        ``scale`` is given."""
        a = np.asarray(a)
        if field is None:
            field = "complex" if np.iscomplexobj(a) and np.any(a.imag != 0) else "real"
        structure = "generic" if scale is None else "scaled_isometric"
        return cls(a, structure=structure, scale=scale, field=field)

    @property
    def grid_shape(self):
        if self.image_shape is None:
            return None
        h, w = self.image_shape
        return (h * self.pad_factor, w * self.pad_factor)

    @property
    def n(self):
        if self.a_matrix is not None:
            return self.a_matrix.shape[0]
        gh, gw = self.grid_shape
        return gh * gw

    @property
    def m(self):
        if self.a_matrix is not None:
            return self.a_matrix.shape[1]
        return self.n

    @property
    def is_isometric(self):
        return self.structure in ("scaled_isometric", "oversampled_fourier")

    def forward(self, x):
        """Return ``A^* x`` (length ``m``)."""
        if self.a_matrix is not None:
            return self.a_matrix.conj().T @ x
        norm = "ortho" if self.normalized else "backward"
        return np.fft.fft2(np.reshape(x, self.grid_shape), norm=norm).ravel()

    def adjoint(self, y):
        """Return ``A y`` (length ``n``)."""
        if self.a_matrix is not None:
            return self.a_matrix @ y
        grid = np.reshape(y, self.grid_shape)
        if self.normalized:
            return np.fft.ifft2(grid, norm="ortho").ravel()
        # adjoint of the raw DFT is N * ifft
        return np.fft.ifft2(grid, norm="forward").ravel()

    def dense(self):
        """Materialize ``A`` as an ``n x m`` array."""
        if self.a_matrix is not None:
            return self.a_matrix
        eye = np.eye(self.n, dtype=np.complex128)
        # columns of A^* applied to basis vectors give rows of A^*
        a_star = np.stack([self.forward(e) for e in eye], axis=1)
        return a_star.conj().T

    def support_mask(self):
        """Boolean mask of the unpadded image region on the padded grid."""
        if self.image_shape is None:
            return np.ones(self.n, dtype=bool)
        h, w = self.image_shape
        mask = np.zeros(self.grid_shape, dtype=bool)
        mask[:h, :w] = True
        return mask.ravel()

    def validate(self):
        """Check the type invariants; raise ``ConfigurationError`` if violated."""
        a = self.dense()
        if self.field == "real" and np.any(a.imag != 0):
            raise ConfigurationError("real ensemble has nonzero imaginary parts")
        s = np.linalg.svd(a, compute_uv=False)
        if s.size < self.n or s[-1] <= RANK_TOL * s[0]:
            raise ConfigurationError("A^* does not have full column rank")
        if self.is_isometric:
            gram = a @ a.conj().T
            dev = np.max(np.abs(gram - self.scale * np.eye(self.n)))
            if dev >= ISOMETRY_TOL * max(1.0, self.scale):
                raise ConfigurationError(f"A A^* deviates from l*I by {dev:.3e}")
        return self


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    ensemble: SamplingEnsemble
    amplitudes: np.ndarray
    truth: np.ndarray | None = None
    snr_db: float | None = None
    seed: int = 0
    clamp_count: int = 0

    def __post_init__(self):
        b = np.array(self.amplitudes, dtype=np.float64)
        if b.shape != (self.ensemble.m,):
            raise DimensionError(f"amplitudes must have length {self.ensemble.m}")
        if np.any(b < 0):
            raise ConfigurationError("amplitudes must be nonnegative")
        b.setflags(write=False)
        object.__setattr__(self, "amplitudes", b)
        if self.truth is not None:
            t = _as_vector(self.truth, self.ensemble.n, "truth").copy()
            t.setflags(write=False)
            object.__setattr__(self, "truth", t)

    @property
    def n(self):
        return self.ensemble.n

    @property
    def m(self):
        return self.ensemble.m

    @property
    def b_min(self):
        return float(self.amplitudes.min()) if self.amplitudes.size else 0.0

    @property
    def flagged(self):
        """True when ``b_min <= 0``, outside the local-convergence assumptions."""
        return self.b_min <= 0.0


@dataclass(frozen=True)
class PriorSpec:
    """Prior information ``g``; only the fields of the active variant are read.

    ``support_mask=None`` means full support.
    """

    variant: str = "none"
    support_mask: np.ndarray | None = field(default=None, compare=False)
    real_valued: bool = False
    nonnegative: bool = False
    p: float | None = None
    s: int | None = None

    VARIANTS = ("none", "indicator", "soft_threshold", "hard_threshold")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ConfigurationError(f"unknown prior variant {self.variant!r}")
        if self.support_mask is not None:
            mask = np.array(self.support_mask, dtype=bool)
            mask.setflags(write=False)
            object.__setattr__(self, "support_mask", mask)
        if self.variant == "soft_threshold" and not (self.p is not None and self.p > 0):
            raise ConfigurationError("soft_threshold needs p > 0")
        if self.variant == "hard_threshold" and not (self.s is not None and self.s >= 1):
            raise ConfigurationError("hard_threshold needs a positive integer s")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def indicator(cls, support_mask=None, real_valued=False, nonnegative=False):
        return cls("indicator", support_mask, real_valued=real_valued, nonnegative=nonnegative)

    @classmethod
    def soft_threshold(cls, p, support_mask=None):
        return cls("soft_threshold", support_mask, p=float(p))

    @classmethod
    def hard_threshold(cls, s, support_mask=None):
        return cls("hard_threshold", support_mask, s=int(s))

    def check(self, n):
        """Validate against signal length ``n``."""
        if self.support_mask is not None and self.support_mask.shape != (n,):
            raise DimensionError(f"support_mask must have length {n}")
        if self.variant == "hard_threshold":
            size = n if self.support_mask is None else int(self.support_mask.sum())
            if self.s > size:
                raise ConfigurationError(f"sparsity s={self.s} exceeds support size {size}")
        return self


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_gaussian(n, m, field="real", seed=0):
    """Gaussian phase retrieval instance.

    Real: entries of ``A`` and the truth are ``N(0, 1)``. Complex: entries are
    ``N(0, 1/2) + i N(0, 1/2)`` so that ``E|a_ij|^2 = 1``.
    """
    if n < 1 or m < 1:
        raise ConfigurationError("n and m must be positive")
    if field not in FIELDS:
        raise ConfigurationError(f"unknown field {field!r}")
    rng = np.random.default_rng(seed)
    if field == "real":
        a = rng.standard_normal((n, m)).astype(np.complex128)
        truth = rng.standard_normal(n).astype(np.complex128)
    else:
        a = _complex_normal(rng, (n, m))
        truth = _complex_normal(rng, n)
    ens = SamplingEnsemble(a, field=field)
    return ProblemInstance(ens, measure(ens, truth), truth=truth, seed=seed)


def gen_oversampled_fourier(height, width, pad_factor=2, *, normalized=False):
    """Matrix-free oversampled 2-D DFT on a ``pad_factor``-times larger grid.

    The signal lives on the padded grid; :meth:`SamplingEnsemble.support_mask`
    marks the ``height x width`` image region. With the raw DFT
    ``A A^* = N I`` where ``N`` is the padded pixel count; ``normalized=True``
    uses the unitary DFT so ``l = 1``.
    """
    if height < 1 or width < 1:
        raise ConfigurationError("image dimensions must be positive")
    if pad_factor < 1:
        raise ConfigurationError("pad_factor must be >= 1")
    size = height * width * pad_factor * pad_factor
    if size > MAX_FOURIER_SIZE:
        raise ConfigurationError(f"padded grid of {size} pixels is too large")
    scale = 1.0 if normalized else float(size)
    return SamplingEnsemble(
        None,
        structure="oversampled_fourier",
        scale=scale,
        field="complex",
        image_shape=(height, width),
        pad_factor=pad_factor,
        normalized=normalized,
    )


def measure(ensemble, x):
    """Amplitudes ``|A^* x|``."""
    x = _as_vector(x, ensemble.n, "x")
    return np.abs(ensemble.forward(x))


def noise_vector(b, snr_db, seed):
    """Gaussian noise rescaled so ``20 log10(||b|| / ||eps||) = snr_db``."""
    if math.isinf(snr_db) and snr_db > 0:
        return np.zeros(len(b))
    if not math.isfinite(snr_db):
        raise ConfigurationError(f"snr_db must be finite or +inf, got {snr_db!r}")
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(len(b))
    norm = np.linalg.norm(eps)
    target = np.linalg.norm(b) * 10.0 ** (-snr_db / 20.0)
    return eps * (target / norm) if norm > 0 else eps


def add_noise(instance, snr_db, seed=0):
    """Add amplitude-domain Gaussian noise at ``snr_db`` and clamp at zero.

    ``snr_db = inf`` returns the clean amplitudes unchanged.
    """
    snr_db = float(snr_db)
    eps = noise_vector(instance.amplitudes, snr_db, seed)
    noisy = instance.amplitudes + eps
    clamped = int(np.count_nonzero(noisy < 0))
    noisy = np.maximum(noisy, 0.0)
    return replace(instance, amplitudes=noisy, snr_db=snr_db, clamp_count=clamped)


def rel_err(x, truth):
    """Phase-aligned relative error ``min_{|a|=1} ||x - a truth|| / ||truth||``."""
    x = np.asarray(x, dtype=np.complex128)
    truth = np.asarray(truth, dtype=np.complex128)
    if x.shape != truth.shape:
        raise DimensionError("x and truth must have equal length")
    tnorm = np.linalg.norm(truth)
    if tnorm == 0:
        raise ConfigurationError("truth vector is zero")
    ip = np.vdot(truth, x)
    alpha = ip / abs(ip) if ip != 0 else 1.0
    return float(np.linalg.norm(x - alpha * truth) / tnorm)


def residual(ensemble, x, b):
    """Truth-free surrogate ``|| |A^* x| - b || / ||b||``."""
    r = measure(ensemble, x) - b
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return float(np.linalg.norm(measure(ensemble, x)))
    return float(np.linalg.norm(r) / bnorm)
