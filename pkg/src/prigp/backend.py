"""Kernel backend selection.

At import time the compiled extension ``prigp._ckernels`` is preferred; the
pure-NumPy module ``prigp._pykernels`` is the fallback.  The environment
variable ``PRIGP_BACKEND`` forces a choice (``c`` or ``py``), and tests or
benchmarks can switch temporarily with the ``force`` context manager.
"""

import contextlib
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_MODULES = {"py": _pykernels}
if _ckernels is not None:
    _MODULES["c"] = _ckernels


def _initial():
    forced = os.environ.get("PRIGP_BACKEND")
    if forced:
        if forced not in _MODULES:
            raise RuntimeError(
                f"PRIGP_BACKEND={forced!r} unavailable; choices: {sorted(_MODULES)}"
            )
        return forced
    return "c" if "c" in _MODULES else "py"


_active = _initial()


def available():
    """Backend names importable in this environment."""
    return sorted(_MODULES)


def active_name():
    return _active


def get():
    """The module implementing the kernel primitives."""
    return _MODULES[_active]


@contextlib.contextmanager
def force(name):
    """Temporarily pin the backend (used by tests and benchmarks)."""
    global _active
    if name not in _MODULES:
        raise RuntimeError(f"backend {name!r} unavailable; choices: {sorted(_MODULES)}")
    previous = _active
    _active = name
    try:
        yield _MODULES[name]
    finally:
        _active = previous
