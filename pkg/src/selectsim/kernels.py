"""Backend selection for the geometry kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over. Set ``SELECTSIM_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

if os.environ.get("SELECTSIM_PURE"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernels") else "python"

DISK = _impl.DISK
RECT = _impl.RECT
EPS = _impl.EPS
PropagationError = _impl.PropagationError
footprint_overlap = _impl.footprint_overlap
capsule_penetration = _impl.capsule_penetration
capsule_hits = _impl.capsule_hits
sweep_gap = _impl.sweep_gap
propagate = _impl.propagate
blocked_cells = _impl.blocked_cells
grid_distances = _impl.grid_distances


def backends():
    """Every importable kernel module, keyed by backend name."""
    from . import _kernels_py

    found = {"python": _kernels_py}
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
