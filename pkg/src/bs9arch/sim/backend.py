"""Kernel selection.

The compiled kernel is used when it imports; otherwise the pure-Python
one.  ``BS9_KERNEL=python`` forces the fallback.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _fallback

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

KERNELS = ("compiled", "python")


def available() -> list[str]:
    return [k for k in KERNELS if k == "python" or _compiled is not None]


def default() -> str:
    if os.environ.get("BS9_KERNEL", "").lower() == "python" or _compiled is None:
        return "python"
    return "compiled"


def get(name: str | None = None) -> ModuleType:
    name = name or default()
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown kernel {name!r}; choose from {KERNELS}")


def reload() -> None:
    """Re-import the compiled kernel (after an in-place build)."""
    global _compiled
    try:
        _compiled = importlib.import_module(f"{__package__}._kernel")
    except ImportError:
        _compiled = None
