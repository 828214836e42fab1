"""Geometry kernel dispatch.

The compiled extension is used when it imports; ``GRASPLAB_PURE_PYTHON=1``
forces the NumPy fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels

_impl = _pykernels
BACKEND = "python"

if os.environ.get("GRASPLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels

        _impl = _ckernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

strip_interval = _impl.strip_interval
sweep_extents = _impl.sweep_extents
poly_distance = _impl.poly_distance
points_in_poly = _impl.points_in_poly
convex_intersection_area = _impl.convex_intersection_area


def backends():
    """Return ``{name: module}`` for every importable kernel backend."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
