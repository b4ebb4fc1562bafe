"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback in ``_pykernels``. Set ``ADOPTNET_BACKEND=python`` to force
the fallback (``cython`` to require the extension).
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels
from .errors import ConfigError

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_BACKENDS: dict[str, ModuleType | None] = {"python": _pykernels, "cython": _compiled}


def available() -> list[str]:
    return [name for name, mod in _BACKENDS.items() if mod is not None]


def get(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (default: environment, then best)."""
    name = name or os.environ.get("ADOPTNET_BACKEND") or None
    if name is None:
        return _compiled if _compiled is not None else _pykernels
    if name not in _BACKENDS:
        raise ConfigError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}")
    mod = _BACKENDS[name]
    if mod is None:
        raise ConfigError("compiled kernels are not built; reinstall with Cython available")
    return mod


def default_name() -> str:
    return get().NAME
