"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available. ``VLAJ_BACKEND=python|cython`` overrides the default, and
tests or benchmarks can fetch a specific backend explicitly.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _kernels_c  # compiled extension
except ImportError:
    _kernels_c = None


def available_backends() -> list[str]:
    names = ["python"]
    if _kernels_c is not None:
        names.insert(0, "cython")
    return names


def get_backend(name: str | None = None) -> ModuleType:
    """Resolve a kernel module by name, env override, or default preference."""
    if name is None:
        name = os.environ.get("VLAJ_BACKEND", "").strip().lower() or None
    if name in (None, "auto"):
        return _kernels_c if _kernels_c is not None else _kernels_py
    if name in ("python", "numpy"):
        return _kernels_py
    if name in ("cython", "compiled", "c"):
        if _kernels_c is None:
            raise RuntimeError("compiled kernel extension is not available")
        return _kernels_c
    raise ValueError(f"unknown backend '{name}'")


def active_backend_name() -> str:
    return get_backend().BACKEND_NAME
