"""Hot-kernel dispatch.

The compiled ``_ckernels`` extension is used when it is importable; otherwise
the numpy fallback in ``_pykernels`` is used. Set ``GPSPR_BACKEND=python`` to
force the fallback.
"""
import importlib
import os

_MODULES = {"cython": "gpspr._ckernels", "python": "gpspr._pykernels"}


def load_backend(name):
    """Import and return the kernel module for backend ``name``."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}") from None


def available_backends():
    names = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    forced = os.environ.get("GPSPR_BACKEND")
    if forced:
        return forced, load_backend(forced)
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", load_backend("python")


BACKEND, _impl = _select()

cholesky = _impl.cholesky
forward_sub = _impl.forward_sub
back_sub = _impl.back_sub
cho_solve = _impl.cho_solve
jacobi_svd = _impl.jacobi_svd
prox_amplitude = _impl.prox_amplitude
