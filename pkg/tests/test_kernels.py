import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from bendcurv import Sphere, Torus, generate_refinement, kernels
from bendcurv import _kernels_py
from bendcurv.curvature import dihedral_table

try:
    from bendcurv import _core
except ImportError:  # pragma: no cover
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def _edge_args(mesh):
    loc = mesh.edge_local
    f1, f2 = mesh.edge_facets[:, 0], mesh.edge_facets[:, 1]
    return (f1, f2, loc[:, 0, 0], loc[:, 0, 1], loc[:, 0, 2], loc[:, 1, 0], loc[:, 1, 1],
            loc[:, 1, 2])


@needs_core
@pytest.mark.parametrize("chart", [Sphere(1.0), Torus(2.0, 1.0)], ids=["sphere", "torus"])
def test_backends_agree(chart):
    m = generate_refinement(chart, 4)
    P = np.ascontiguousarray(m.vertices)
    F = np.ascontiguousarray(m.facets, dtype=np.int64)
    n_py = _kernels_py.facet_normals(P, F)
    n_cy = _core.facet_normals(P, F)
    np.testing.assert_allclose(n_cy, n_py, atol=1e-12)
    np.testing.assert_allclose(_core.facet_tau(P, F), _kernels_py.facet_tau(P, F), atol=1e-12)
    args = [np.ascontiguousarray(a, dtype=np.int64) for a in _edge_args(m)]
    a = _kernels_py.edge_dihedrals(P, n_py, *args)
    b = _core.edge_dihedrals(P, n_py, *args)
    for x, y in zip(a, b):
        np.testing.assert_allclose(np.asarray(y, dtype=float), np.asarray(x, dtype=float),
                                   atol=1e-12)


@needs_core
def test_compensated_sum_backends():
    rng = np.random.default_rng(0)
    x = rng.normal(size=10000) * 10.0 ** rng.integers(-8, 8, 10000)
    assert _core.compensated_sum(x) == _kernels_py.compensated_sum(x)
    # naive summation drops every 1e-16 term against 1.0
    tiny = [1.0] + [1e-16] * 10000
    assert kernels.compensated_sum(tiny) == pytest.approx(1.0 + 1e-12, abs=1e-16)
    assert sum(tiny) == 1.0


def test_use_backend_switches_results():
    m = generate_refinement(Sphere(1.0), 3)
    old = kernels.BACKEND
    try:
        kernels.use_backend("python")
        assert kernels.BACKEND == "python"
        th_py = dihedral_table(m).theta
        if _core is not None:
            kernels.use_backend("cython")
            assert kernels.BACKEND == "cython"
            np.testing.assert_allclose(dihedral_table(m).theta, th_py, atol=1e-12)
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
    finally:
        kernels.use_backend(old)


def test_environment_forces_fallback():
    env = dict(os.environ, BENDCURV_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import bendcurv.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_empty_inputs():
    P = np.zeros((0, 3))
    assert kernels.facet_tau(P, np.zeros((0, 3), dtype=int)).shape == (0,)
    e = np.zeros(0, dtype=int)
    res = kernels.edge_dihedrals(P, np.zeros((0, 3)), *([e] * 8))
    assert all(len(r) == 0 for r in res)


def test_module_reload_is_stable():
    mod = importlib.reload(kernels)
    assert mod.BACKEND in ("cython", "python")
