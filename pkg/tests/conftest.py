import numpy as np
import pytest

from gpspr import kernels

KERNEL_NAMES = ("cholesky", "forward_sub", "back_sub", "cho_solve", "jacobi_svd", "prox_amplitude")


@pytest.fixture(params=kernels.available_backends())
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = kernels.load_backend(request.param)
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
