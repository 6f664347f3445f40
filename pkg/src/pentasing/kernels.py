"""Newton kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. Set ``PENTASING_PURE_PYTHON=1`` to force the
fallback.
"""
from __future__ import annotations

import os
from types import ModuleType
from typing import Dict, Optional

from . import _kernel_py

_BACKENDS: Dict[str, ModuleType] = {"python": _kernel_py}

if os.environ.get("PENTASING_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel_c  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _BACKENDS["cython"] = _kernel_c

DEFAULT = "cython" if "cython" in _BACKENDS else "python"


def available() -> tuple:
    return tuple(sorted(_BACKENDS))


def get_backend(name: Optional[str] = None) -> ModuleType:
    name = name or DEFAULT
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available()}") from None


def newton_batch(*args, **kwargs):
    return get_backend().newton_batch(*args, **kwargs)


def reduced_residual(*args, **kwargs):
    # single-point evaluation is not hot; the reference implementation is used
    return _kernel_py.reduced_residual(*args, **kwargs)
