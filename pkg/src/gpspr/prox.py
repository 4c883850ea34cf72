"""Proximal and projection operators for the amplitude constraint and priors.

The penalty parameter rho is fixed at 1: indicator proxes do not depend on
it, and the threshold levels ``p`` / ``weight`` are exposed directly.
"""
import numpy as np

from gpspr import kernels
from gpspr.errors import ConfigurationError, DimensionError


def prox_amplitude(z, b):
    """Project ``z`` onto ``{y : |y| = b}``: ``b * z / |z|``, and 0 where ``z = 0``."""
    z = np.asarray(z, dtype=np.complex128)
    b = np.asarray(b, dtype=np.float64)
    if z.shape != b.shape:
        raise DimensionError(f"z and b differ in shape: {z.shape} vs {b.shape}")
    return kernels.prox_amplitude(z, b)


def _support(prior, n):
    if prior.support_mask is None:
        return np.ones(n, dtype=bool)
    if prior.support_mask.shape != (n,):
        raise DimensionError(f"support_mask must have length {n}")
    return prior.support_mask


def hard_threshold(x, s, support):
    """Keep the ``s`` largest-modulus entries inside ``support``.

    Ties at the cut-off keep the lowest index.
    """
    idx = np.flatnonzero(support)
    if s > idx.size:
        raise ConfigurationError(f"sparsity s={s} exceeds support size {idx.size}")
    order = np.argsort(-np.abs(x[idx]), kind="stable")
    keep = idx[order[:s]]
    out = np.zeros_like(x)
    out[keep] = x[keep]
    return out


def prox_prior(x, prior):
    """Apply ``prox_g`` for the prior described by ``prior`` (a ``PriorSpec``).

    The soft threshold is ``max(Re(x) - p, 0)`` on the support: the prox of
    ``p * ||x||_1`` restricted to real nonnegative signals. General complex
    shrinkage is :func:`prox_l1`.
    """
    x = np.asarray(x, dtype=np.complex128)
    variant = prior.variant
    if variant == "none":
        return x
    support = _support(prior, x.shape[0])
    if variant == "indicator":
        out = x.real.astype(np.complex128) if (prior.real_valued or prior.nonnegative) else x.copy()
        if prior.nonnegative:
            out = np.maximum(out.real, 0.0).astype(np.complex128)
        out[~support] = 0.0
        return out
    if variant == "soft_threshold":
        out = np.maximum(x.real - prior.p, 0.0).astype(np.complex128)
        out[~support] = 0.0
        return out
    if variant == "hard_threshold":
        return hard_threshold(x, prior.s, support)
    raise ConfigurationError(f"unknown prior variant {variant!r}")


def prox_l1(y, weight):
    """Complex soft shrinkage ``y * max(1 - weight / |y|, 0)``."""
    if not weight > 0:
        raise ConfigurationError("weight must be positive")
    y = np.asarray(y)
    mod = np.abs(y)
    scale = np.zeros(mod.shape)
    nz = mod > weight
    scale[nz] = 1.0 - weight / mod[nz]
    return y * scale
