"""Slot-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the pure-numpy
kernel is always available.  ``RISMEC_BACKEND=python|cython`` forces a choice.
"""
from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _core

    _HAVE_CYTHON = True
except ImportError:
    _core = None
    _HAVE_CYTHON = False


def available_backends() -> tuple[str, ...]:
    return ("python", "cython") if _HAVE_CYTHON else ("python",)


def default_backend() -> str:
    env = os.environ.get("RISMEC_BACKEND")
    if env:
        if env not in available_backends():
            raise RuntimeError(f"backend {env!r} requested but not available")
        return env
    return "cython" if _HAVE_CYTHON else "python"


def kernel_class(backend: str | None = None):
    name = backend or default_backend()
    if name == "python":
        return _kernel_py.RadioKernel
    if name == "cython":
        if not _HAVE_CYTHON:
            raise RuntimeError("compiled kernel not available; rebuild the extension")
        return _core.RadioKernel
    raise ValueError(f"unknown backend {name!r}")


def make_kernel(n_users: int, ap_antennas: int, user_antennas: int, ris_elements: int,
                backend: str | None = None):
    return kernel_class(backend)(n_users, ap_antennas, user_antennas, ris_elements)
