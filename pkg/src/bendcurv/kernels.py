"""Backend selection for the per-facet / per-edge kernels.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
versions in ``_kernels_py`` are used.  Setting ``BENDCURV_PURE_PYTHON=1``
forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("BENDCURV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py


def _ints(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _floats(a):
    return np.ascontiguousarray(a, dtype=float)


def facet_normals(P, facets):
    return _impl.facet_normals(_floats(P), _ints(facets))


def facet_tau(P, facets):
    if len(facets) == 0:
        return np.empty(0)
    return _impl.facet_tau(_floats(P), _ints(facets))


def edge_dihedrals(P, FN, f1, f2, p1, q1, r, p2, q2, s):
    if len(f1) == 0:
        z = np.empty(0)
        z3 = np.empty((0, 3))
        return z, z3, z3.copy(), z3.copy(), z.copy(), np.zeros(0, dtype=bool)
    return _impl.edge_dihedrals(
        _floats(P), _floats(FN), *(_ints(a) for a in (f1, f2, p1, q1, r, p2, q2, s))
    )


def compensated_sum(x):
    return float(_impl.compensated_sum(_floats(np.ravel(x))))


def use_backend(name):
    """Switch backend at runtime (``"cython"`` or ``"python"``); used by benchmarks and tests."""
    global _impl, BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "cython":
        from . import _core
        _impl, BACKEND = _core, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
