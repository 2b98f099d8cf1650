"""Backend selection for the numerical kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
NumPy implementation in ``_pykernels`` takes over. Setting the environment
variable ``QUTRIT_JE_PURE_PYTHON=1`` forces the fallback.
"""
import importlib
import os

BACKENDS = ("cython", "python")

_MODULES = {"cython": "qutrit_je._kernels", "python": "qutrit_je._pykernels"}


def load_backend(name):
    """Import and return the kernel module for ``name`` ("cython" or "python")."""
    if name not in _MODULES:
        raise ValueError(f"unknown kernel backend {name!r}; choose from {BACKENDS}")
    return importlib.import_module(_MODULES[name])


def available_backends():
    out = []
    for name in BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        out.append(name)
    return out


def _select():
    if os.environ.get("QUTRIT_JE_PURE_PYTHON", "").strip() not in ("", "0"):
        return load_backend("python")
    try:
        return load_backend("cython")
    except ImportError:
        return load_backend("python")


_impl = _select()
backend = _impl.NAME

eigh_batch = _impl.eigh_batch
propagate_coeffs = _impl.propagate_coeffs
evolve_coeffs = _impl.evolve_coeffs
