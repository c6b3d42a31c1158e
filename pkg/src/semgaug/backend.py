"""Kernel backend selection: numba-jitted loops or pure numpy.

The backend is chosen once at import from the SEMGAUG_BACKEND environment
variable ("auto", "numba", "numpy"; default "auto" uses numba when it
imports). `set_backend` overrides at runtime, which the benchmark and the
cross-backend tests rely on.
"""

import os

from . import _kernels_numpy

try:
    from . import _kernels_numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _kernels_numba = None
    _HAVE_NUMBA = False

_VALID = ("auto", "numba", "numpy")


def _resolve(name: str) -> str:
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}, expected one of {_VALID}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    if name == "auto":
        return "numba" if _HAVE_NUMBA else "numpy"
    return name


_active = _resolve(os.environ.get("SEMGAUG_BACKEND", "auto"))


def active_backend() -> str:
    """Name of the kernel backend currently in use ("numba" or "numpy")."""
    return _active


def set_backend(name: str) -> str:
    """Switch kernel backend; returns the previous backend name."""
    global _active
    previous = _active
    _active = _resolve(name)
    return previous


def kernels():
    """Module holding the active backend's kernel functions."""
    return _kernels_numba if _active == "numba" else _kernels_numpy


def numba_available() -> bool:
    return _HAVE_NUMBA
