"""Backend selection for the hot kernels.

The compiled ``_walk`` extension is used when it was built; otherwise, or when
``MIXDIM_PURE_PYTHON=1`` is set, the numpy version in ``_walk_py`` is used.
"""
import os

from . import _walk_py

BACKENDS = {"python": _walk_py}

try:
    from . import _walk as _walk_c
except ImportError:  # extension not built
    _walk_c = None
else:
    BACKENDS["compiled"] = _walk_c

if _walk_c is not None and os.environ.get("MIXDIM_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "compiled"
else:
    BACKEND = "python"


def get(name=None):
    """Return the kernel module ``name`` (default: the one selected at import)."""
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
