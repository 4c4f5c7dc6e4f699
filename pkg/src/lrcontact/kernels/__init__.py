"""Element kernels with a numba backend and a pure numpy fallback.

The backend is chosen once at import from ``LRCONTACT_BACKEND``
(``numba`` or ``numpy``); numba is the default when it imports cleanly.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _numpy


def _load_numba() -> ModuleType | None:
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None
    return _numba


def get_backend(name: str | None = None) -> ModuleType:
    name = (name or os.environ.get("LRCONTACT_BACKEND", "numba")).lower()
    if name == "numpy":
        return _numpy
    if name != "numba":
        raise ValueError(f"unknown kernel backend {name!r} (expected 'numba' or 'numpy')")
    return _load_numba() or _numpy


backend = get_backend()
BACKEND_NAME = "numba" if backend is not _numpy else "numpy"

membrane = backend.membrane
volume = backend.volume
contact = backend.contact
