"""Kernel backend selection.

The recursive filters, the servo loop and the Allan-variance sums have two
implementations: a numba ``@njit`` loop and a pure numpy/scipy path. The
backend is picked once at import from ``NVMAG_BACKEND`` (``numba`` or
``numpy``); numba is the default when it can be imported.
"""

from __future__ import annotations

import contextlib
import logging
import os

log = logging.getLogger(__name__)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")


def _initial_backend() -> str:
    requested = os.environ.get("NVMAG_BACKEND", "").strip().lower()
    if requested and requested not in _VALID:
        log.warning("ignoring NVMAG_BACKEND=%r; expected one of %s", requested, _VALID)
        requested = ""
    if requested == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(func):
        return func

    if len(args) == 1 and callable(args[0]):
        return args[0]
    return wrap
