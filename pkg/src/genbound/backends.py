"""Kernel backend selection.

The hot trajectory kernel has a numba JIT implementation and a pure
numpy twin.  ``GENBOUND_BACKEND`` picks one: ``numba``, ``numpy``, or
``auto`` (default: numba when importable, numpy otherwise).
"""

from __future__ import annotations

import os

from . import _kernels_numpy
from .errors import UsageError

_numba_kernels = None
_numba_state = "untried"


def _load_numba():
    global _numba_kernels, _numba_state
    if _numba_state == "untried":
        try:
            from . import _kernels_numba

            _numba_kernels = _kernels_numba
            _numba_state = "ok"
        except ImportError:
            _numba_state = "failed"
    return _numba_kernels


def active_backend() -> str:
    choice = os.environ.get("GENBOUND_BACKEND", "auto").lower()
    if choice in ("", "auto"):
        return "numba" if _load_numba() is not None else "numpy"
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if _load_numba() is None:
            raise UsageError("GENBOUND_BACKEND=numba but numba is not importable")
        return "numba"
    raise UsageError(f"unknown backend {choice!r}")


def pair_stats(*args):
    if active_backend() == "numba":
        return _numba_kernels.pair_stats(*args)
    return _kernels_numpy.pair_stats(*args)
