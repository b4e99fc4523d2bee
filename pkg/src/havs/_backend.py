"""Kernel backend selection.

The compiled extension is used when importable; otherwise the NumPy
fallback.  ``HAVS_BACKEND`` forces one: "compiled"/"cy" or "python"/"py".
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

_env = os.environ.get("HAVS_BACKEND", "auto").strip().lower()
if _env in ("", "auto"):
    kernels = _kernels_cy if _kernels_cy is not None else _kernels_py
elif _env in ("cy", "compiled", "c"):
    if _kernels_cy is None:
        raise ImportError("HAVS_BACKEND=compiled requested but the extension is not built")
    kernels = _kernels_cy
elif _env in ("py", "python", "numpy"):
    kernels = _kernels_py
else:
    raise ImportError(f"unrecognized HAVS_BACKEND value {_env!r}")


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "python")."""
    return kernels.BACKEND


def available_backends() -> tuple[str, ...]:
    names = ["python"]
    if _kernels_cy is not None:
        names.insert(0, "compiled")
    return tuple(names)


def get_kernels(name: str = "active"):
    """Fetch a kernel module by name; used by tests and the backend benchmark."""
    if name in ("active", ""):
        return kernels
    if name in ("compiled", "cy", "c"):
        if _kernels_cy is None:
            raise ValueError("compiled backend is not available")
        return _kernels_cy
    if name in ("python", "py", "numpy"):
        return _kernels_py
    raise ValueError(f"unknown backend {name!r}")


@contextmanager
def use(name: str):
    """Temporarily switch the active backend (benchmarks and tests)."""
    global kernels
    saved = kernels
    kernels = get_kernels(name)
    try:
        yield kernels
    finally:
        kernels = saved
