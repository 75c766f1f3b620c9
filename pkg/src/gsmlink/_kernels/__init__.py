"""Kernel backend selection.

The message-passing inner loops exist twice: a numba-jitted version and a
pure-numpy reference.  GSMLINK_BACKEND chooses at import time:

    GSMLINK_BACKEND=numba   require the jit backend (error if unavailable)
    GSMLINK_BACKEND=numpy   force the reference backend
    unset / auto            jit if numba imports, else numpy

``get_kernels(name)`` returns a specific backend for benchmarks and tests.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import reference

_env = os.environ.get("GSMLINK_BACKEND", "auto").strip().lower()

_jit_error: Exception | None = None
_jit: ModuleType | None = None
if _env in ("auto", "numba"):
    try:
        from . import jit as _jit  # noqa: F401  (compiles lazily on first call)
    except Exception as exc:  # pragma: no cover - depends on environment
        _jit_error = exc
        if _env == "numba":
            raise ImportError("GSMLINK_BACKEND=numba but numba is unusable") from exc

if _env == "numpy":
    _default = reference
elif _jit is not None:
    _default = _jit
else:
    _default = reference

BACKEND = "numba" if _default is not reference else "numpy"


def get_kernels(name: str | None = None) -> ModuleType:
    """Kernel module for 'numba' or 'numpy'; None gives the selected default."""
    if name is None:
        return _default
    name = name.lower()
    if name == "numpy":
        return reference
    if name == "numba":
        if _jit is None:
            from . import jit as jit_mod  # raises with the real cause
            return jit_mod
        return _jit
    raise ValueError(f"unknown backend {name!r}")
