"""Kernel backend selection: compiled extension with pure-numpy fallback.

The compiled module is optional; if it failed to build (or the environment
variable ``ENSHEAT_FORCE_PYTHON`` is set) the numpy implementation is used.
Both produce identical results; the compiled one is faster on the per-step
scatter that dominates assembly.  ``set_backend`` exists mainly for the
benchmark script and tests.
"""

from __future__ import annotations

import os

from . import _kernels_np

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_FORCED = os.environ.get("ENSHEAT_FORCE_PYTHON", "") not in ("", "0")
_active = _kernels_np if (_compiled is None or _FORCED) else _compiled


def available_backends() -> dict:
    out = {"python": _kernels_np}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def active_backend() -> str:
    return "cython" if _active is _compiled else "python"


def set_backend(name: str) -> None:
    global _active
    try:
        _active = available_backends()[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available") from None


def scatter_add(data, pos, vals):
    _active.scatter_add(data, pos, vals)


def scatter_add_rows(out, idx, vals):
    _active.scatter_add_rows(out, idx, vals)
