import math

import numpy as np
import pytest

from bendcurv import Sphere, Torus, build_mesh, geodesic_shoot
from bendcurv.bending import (RolledStrip, ScalingTable, TriangulatedFlow, bricard_seed,
                              calibrate_trace_bound, chord_derivative_experiment,
                              chord_limit_ratio, corrugation_flow, cylinder_flow,
                              edge_scaling_experiment, flex_continuation, flow_from_spec,
                              invariance_trace, isometry_defect, random_convex_polytope,
                              random_smooth_vertex_flow, richardson, rigid_flow,
                              rigid_vertex_flow, scaling_vertex_flow, schlafli_residual,
                              tetrahedron)
from bendcurv.bending.flex import gauge_fix
from bendcurv.curvature import dihedral_table, sum_length_theta
from bendcurv.errors import BranchPoint, ProfileOverturn, RigidConfiguration


def cube_mesh():
    V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    F = [t for a, b, c, d in quads for t in ((a, b, c), (a, c, d))]
    return build_mesh(V, F)


# smooth flows ---------------------------------------------------------------


@pytest.mark.parametrize("flow", [corrugation_flow(), cylinder_flow(), rigid_flow(Torus())],
                         ids=["corrugation", "cylinder", "rigid"])
def test_isometry_audit(flow):
    assert flow.isometric
    assert isometry_defect(flow, 20, np.random.default_rng(0).uniform(0, 1, 5)) <= 1e-10


def test_flat_corrugation_has_zero_angles():
    flow = corrugation_flow([0.0])
    tf = TriangulatedFlow(flow, 4)
    for t in (0.0, 0.7):
        assert np.all(dihedral_table(tf.mesh_at(t)).theta == 0.0)


def test_corrugation_overturn_rejected():
    flow = corrugation_flow([1.0, 1.0])
    flow.chart(0.5)
    with pytest.raises(ProfileOverturn):
        flow.chart(0.6)


def test_corrugation_flow_smooth_in_t():
    flow = corrugation_flow()
    uv = np.random.default_rng(2).uniform(0, 1, (20, 2)) * [2 * math.pi, 1]
    h = 1e-3
    t = 0.4
    x = [flow.chart(t + k * h).points(uv) for k in (-1, 0, 1)]
    second = np.abs(x[0] - 2 * x[1] + x[2]).max() / h**2
    assert second < 10


def test_rolled_strip_flat_limit():
    chart = RolledStrip(1e6)
    uv = np.random.default_rng(3).uniform(0, 1, (30, 2))
    flat = np.column_stack([uv[:, 0], uv[:, 1], np.zeros(30)])
    np.testing.assert_allclose(chart.points(uv), flat, atol=1e-6)


def test_rolled_strip_geodesics_are_straight_lines():
    chart = RolledStrip(0.7, 2.0, 1.0)
    d = np.array([0.6, 0.8])
    path = geodesic_shoot(chart, (0.2, 0.1), d, 0.8)
    expect = chart.points(np.array([0.2, 0.1]) + path.s[:, None] * d)
    np.testing.assert_allclose(path.xyz, expect, atol=1e-6)


def test_flow_from_spec():
    f = flow_from_spec({"flow": "corrugation", "a": [0.3, 0.2], "S": 6.2832, "w": 1.0})
    assert f.chart(1.0).a == pytest.approx(0.5)
    r = flow_from_spec({"flow": "rigid", "surface": {"surface": "sphere", "r": 2.0}})
    assert r.chart(0.3).base.r == 2.0


# flexes ---------------------------------------------------------------------


def test_tetrahedron_is_rigid():
    with pytest.raises(RigidConfiguration):
        flex_continuation(tetrahedron(), [0.0, 0.5])


def test_bricard_flex_path():
    flex = flex_continuation(bricard_seed(), np.linspace(0, 1, 11))
    assert flex.edge_drift() <= 1e-10
    assert flex.gauge_error() == 0.0
    assert np.abs(flex.positions(1.0) - flex.positions(0.0)).max() > 0.1
    sums = [sum_length_theta(flex.mesh_at(t), "winding") for t in flex.t_grid]
    assert max(sums) - min(sums) <= 1e-12


def test_bricard_positions_between_nodes():
    flex = flex_continuation(bricard_seed(), [0.0, 0.5, 1.0])
    X = flex.positions(0.27)
    L0 = flex.reference.edge_lengths()
    L = flex.reference.with_vertices(X).edge_lengths()
    assert np.abs(L - L0).max() / L0.min() <= 1e-12
    np.testing.assert_array_equal(X[0], [0, 0, 0])


def test_gauge_fix():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 3))
    Y = gauge_fix(X)
    assert np.all(Y[0] == 0) and np.all(Y[1, 1:] == 0) and Y[2, 2] == 0
    dX = np.linalg.norm(X[:, None] - X[None], axis=-1)
    dY = np.linalg.norm(Y[:, None] - Y[None], axis=-1)
    np.testing.assert_allclose(dX, dY, atol=1e-12)


def test_branch_point_carries_last_t():
    err = BranchPoint("x", last_t=0.3)
    assert err.last_t == 0.3


# Schläfli -------------------------------------------------------------------


def test_schlafli_rigid_cube():
    r = schlafli_residual(rigid_vertex_flow(cube_mesh()), 0.3, h=1e-2, reference="winding")
    assert abs(r.residual) <= 1e-12


def test_schlafli_scaling_flow():
    m = random_convex_polytope(30, seed=8)
    r = schlafli_residual(scaling_vertex_flow(m), 0.2, h=1e-2, reference="winding")
    assert abs(r.residual) <= 1e-12


def test_schlafli_random_deformation():
    m = random_convex_polytope(40, seed=21)
    r = schlafli_residual(random_smooth_vertex_flow(m, seed=21), 0.4, 1e-4, "winding")
    assert r.scale > 1.0
    assert abs(r.residual) <= 1e-6 * r.scale


def test_schlafli_dense_oracle():
    # the Richardson derivative agrees with a much finer central difference
    m = random_convex_polytope(40, seed=22)
    flow = random_smooth_vertex_flow(m, seed=22)
    r = schlafli_residual(flow, 0.4, 1e-4, "winding")
    th = lambda s: dihedral_table(flow.mesh_at(s), "winding").theta  # noqa: E731
    fine = (th(0.4 + 1e-6) - th(0.4 - 1e-6)) / 2e-6
    np.testing.assert_allclose(r.theta_dot, fine, atol=1e-7)


def test_schlafli_on_triangulated_corrugation():
    r = schlafli_residual(TriangulatedFlow(corrugation_flow(), 4, warp=0.2), 0.5)
    assert r.passed()


def test_schlafli_on_bricard():
    flex = flex_continuation(bricard_seed(), np.linspace(0, 1, 6))
    r = schlafli_residual(flex, 0.5, reference="winding")
    assert r.passed()


def test_richardson_on_polynomial():
    d, d1, d2 = richardson(lambda t: t**3, 1.0, 1e-2)
    assert d == pytest.approx(3.0, abs=1e-12)
    assert abs(d1 - 3.0) > abs(d2 - 3.0)


# scaling tables -------------------------------------------------------------


def test_scaling_table_fit_and_sorting():
    L = np.array([0.4, 0.1, 0.2, 0.05])
    tab = ScalingTable("q", L, 3 * L**2, target=2.0)
    assert np.all(np.diff(tab.scale) > 0)
    assert tab.slope == pytest.approx(2.0, abs=1e-12)
    assert tab.passed
    zero = ScalingTable("q", L, np.zeros(4), target=2.0)
    assert zero.exact_zero and zero.slope is None and zero.passed


def test_chord_rigid_flow_vanishes():
    flow = rigid_flow(Sphere(1.0, axis="x"))
    tab = chord_derivative_experiment(flow, (0.5, 0.3), (1.0, 0.0), [0.05, 0.1, 0.2])
    # chords are invariant; only difference-quotient roundoff remains
    assert np.abs(tab.value).max() < 1e-10


def test_chord_on_cylinder_flow():
    tab = chord_derivative_experiment(cylinder_flow([1.0, 0.5]), (0.05, 0.5), (1.0, 0.0),
                                      np.geomspace(0.0125, 0.8, 7))
    # measured exponent of an isometric bending; the O(R^2) bound holds with room
    assert tab.bound_holds
    assert tab.slope == pytest.approx(3.0, abs=0.05)
    assert chord_limit_ratio(tab) < 1e-3


def test_chord_closed_form_on_cylinder():
    # chord of an arc of length R on a circle of radius r: 2 r sin(R / 2r)
    flow = cylinder_flow([1.0, 0.5])
    tab = chord_derivative_experiment(flow, (0.05, 0.5), (1.0, 0.0), [0.1, 0.4])
    r, dr = 1.0, 0.5
    for R, c, d in zip(tab.scale, tab.extra["chord"], tab.value):
        assert c == pytest.approx(2 * r * math.sin(R / (2 * r)), abs=1e-10)
        exact = dr * (2 * math.sin(R / (2 * r)) - R / r * math.cos(R / (2 * r)))
        assert d == pytest.approx(exact, abs=1e-9)


@pytest.mark.parametrize("quantity,lo,hi", [("theta", 0.7, 1.3), ("one_minus_ndotg", 1.7, 2.3),
                                            ("ndotg_derivative", 0.7, 3.5),
                                            ("theta_derivative", -0.3, 1.3)])
def test_edge_scaling_small_levels(quantity, lo, hi):
    tab = edge_scaling_experiment(corrugation_flow(), [3, 4, 5, 6], 0.5, 1e-4, quantity)
    assert lo <= tab.slope <= hi


def test_edge_scaling_rejects_unknown():
    with pytest.raises(ValueError):
        edge_scaling_experiment(corrugation_flow(), [3], quantity="area")


# invariance trace -----------------------------------------------------------


def test_trace_rigid_sphere_constant():
    flow = rigid_flow(Sphere(1.0))
    tr = invariance_trace(flow, 3, [0.0, 0.5, 1.0], derivative=False)
    assert np.ptp(tr.delta_V) <= 1e-12


def test_trace_corrugation_small_levels():
    flow = corrugation_flow()
    traces = [invariance_trace(flow, j, [0.0, 0.5, 1.0], warp=0.3) for j in (3, 4, 5)]
    K, ratios, ok = calibrate_trace_bound(traces)
    assert ok
    assert traces[-1].max_derivative < traces[0].max_derivative
    assert all(tr.regularity_ok for tr in traces)
    assert np.abs(traces[-1].mean_curvature).max() < 2e-2


def test_trace_structured_grid_cancels():
    # the S/2 glide symmetry of the corrugation maps the structured grid to
    # itself with reversed normal, so every contribution cancels a partner
    tr = invariance_trace(corrugation_flow(), 4, [0.0, 0.5], derivative=False)
    assert np.abs(tr.delta_V).max() < 1e-13


def test_trace_requires_closed_flow():
    with pytest.raises(ValueError):
        invariance_trace(cylinder_flow(), 3, [0.0])
