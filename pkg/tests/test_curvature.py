import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bendcurv import (NormalField, Sphere, Torus, build_mesh, dihedral, dihedral_table,
                      discrete_first_variation, edge_average_field, facet_normal,
                      generate_refinement, isometric_counterexample_pair,
                      oriented_facet_normals, smooth_mean_curvature_integral,
                      sum_length_theta, write_edge_csv)
from bendcurv.bending import random_convex_polytope, rotation
from bendcurv.curvature import icosahedron, min_facet_separation
from bendcurv.errors import AmbiguousOrientation, FoldedEdge

CUBE_V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)


def cube():
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    F = []
    for a, b, c, d in quads:
        F += [(a, b, c), (a, c, d)]
    m = build_mesh(CUBE_V, F)
    # make the winding outward
    n = oriented_facet_normals(m, "winding")
    centre = CUBE_V[m.facets].mean(axis=1) - 0.5
    if np.einsum("ij,ij->i", n, centre)[0] < 0:
        m = build_mesh(CUBE_V, m.facets[:, ::-1])
    return m


def regular_tetrahedron():
    V = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return build_mesh(V, [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])


def test_facet_normal_flip_rule():
    m = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    np.testing.assert_allclose(facet_normal(m, 0, (0, 0, 1)), [0, 0, 1])
    np.testing.assert_allclose(facet_normal(m, 0, (0, 0, -1)), [0, 0, -1])
    with pytest.raises(AmbiguousOrientation):
        facet_normal(m, 0, (1, 0, 0))


def test_sphere_facet_normals_align_with_chart():
    chart = Sphere(1.0)
    m = generate_refinement(chart, 5)
    n = oriented_facet_normals(m)
    c = m.vertices[m.facets].mean(axis=1)
    radial = c / np.linalg.norm(c, axis=1)[:, None]
    cosang = np.einsum("ij,ij->i", n, radial)
    assert np.all(cosang > math.cos(math.radians(5)))


def test_coplanar_edge():
    m = build_mesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])
    rec = dihedral(m, (0, 2))
    assert rec.theta == 0.0
    np.testing.assert_allclose(rec.V + rec.W, 0, atol=1e-15)


def test_cube_edges():
    m = cube()
    t = dihedral_table(m, "winding")
    diag = np.isclose(t.length, math.sqrt(2))
    np.testing.assert_allclose(t.theta[~diag], math.pi / 2, atol=1e-14)
    np.testing.assert_allclose(t.theta[diag], 0.0, atol=1e-14)
    vw = np.linalg.norm(t.V + t.W, axis=1)[~diag]
    np.testing.assert_allclose(vw, math.sqrt(2), atol=1e-14)
    assert sum_length_theta(m, "winding") == pytest.approx(6 * math.pi, abs=1e-12)


def test_tetrahedron_edge_angle():
    t = dihedral_table(regular_tetrahedron(), "winding")
    np.testing.assert_allclose(t.theta, math.acos(-1 / 3), atol=1e-12)


def test_dihedral_record_invariants():
    m = random_convex_polytope(30, seed=3)
    t = dihedral_table(m, "winding")
    loc = m.edge_local[t.edge_index]
    p = m.vertices[loc[:, 0, 0]]
    q = m.vertices[loc[:, 0, 1]]
    n1 = t.facet_normals[m.edge_facets[t.edge_index, 0]]
    n2 = t.facet_normals[m.edge_facets[t.edge_index, 1]]
    dot = lambda a, b: np.einsum("ij,ij->i", a, b)  # noqa: E731
    np.testing.assert_allclose(dot(t.V, p - q), 0, atol=1e-12)
    np.testing.assert_allclose(dot(t.V, n1), 0, atol=1e-12)
    np.testing.assert_allclose(dot(t.W, n2), 0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(t.V, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(2 * np.sin(t.theta / 2)[:, None] * t.n_pq, t.V + t.W, atol=1e-10)
    np.testing.assert_allclose(np.cos(t.theta), dot(n1, n2), atol=1e-10)
    assert np.all(np.abs(t.theta) < math.pi - 1e-6)
    # convex polytope wound outward: every bend is positive
    assert np.all(t.theta > 0)


def test_folded_edge():
    m = build_mesh([[0, 0, 0], [1, 0, 0], [0.5, 1, 0], [0.5, 1, 1e-12]], [[0, 1, 2], [1, 0, 3]])
    with pytest.raises(FoldedEdge):
        dihedral_table(m, "winding")


def test_edge_average_constant_and_linear():
    p = np.array([0.1, 0.2, 0.3])
    q = np.array([1.0, -0.5, 2.0])
    np.testing.assert_array_equal(edge_average_field((1.0, 2.0, 3.0), p, q), [1, 2, 3])
    A = np.array([[1.0, 2, 0], [0, 1, 3], [2, 0, 1]])
    lin = lambda P: P @ A.T + 1.0  # noqa: E731
    np.testing.assert_allclose(edge_average_field(lin, p, q), lin((p + q) / 2), atol=1e-14)


def test_edge_average_sphere_dense_oracle():
    p, q = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    # a quarter-circle chord is long; order 8 is good to ~2e-7 here, order 16 to 1e-11
    avg = edge_average_field(NormalField(Sphere(1.0)), p, q, order=16)
    # radial unit field averaged along the chord with 1e5 midpoint nodes
    s = (np.arange(100000) + 0.5) / 100000
    pts = p + s[:, None] * (q - p)
    oracle = (pts / np.linalg.norm(pts, axis=1)[:, None]).mean(axis=0)
    np.testing.assert_allclose(avg, oracle, atol=1e-9)
    np.testing.assert_allclose(avg[:2] / np.linalg.norm(avg), [1 / math.sqrt(2)] * 2, atol=1e-12)
    coarse = edge_average_field(NormalField(Sphere(1.0)), p, q)
    np.testing.assert_allclose(coarse, oracle, atol=1e-6)


def test_translation_identity_random_polytopes():
    rng = np.random.default_rng(11)
    for seed in range(5):
        m = random_convex_polytope(25 + 5 * seed, seed)
        c = rng.standard_normal(3)
        dv = discrete_first_variation(m, c, reference="winding").delta_V
        assert abs(dv) <= 1e-10 * m.edge_lengths().sum()


def test_sphere_first_variation_near_8pi():
    chart = Sphere(1.0)
    m = generate_refinement(chart, 4)     # L about 0.14
    rep = discrete_first_variation(m, NormalField(chart))
    assert rep.delta_V == pytest.approx(8 * math.pi, rel=0.02)
    assert rep.mean_curvature_estimate == pytest.approx(
        smooth_mean_curvature_integral(chart, 32), rel=0.02)
    assert not rep.boundary_present


def test_torus_first_variation():
    chart = Torus(2.0, 1.0)
    m = generate_refinement(chart, 5)
    rep = discrete_first_variation(m, NormalField(chart))
    assert rep.mean_curvature_estimate == pytest.approx(-4 * math.pi**2, rel=1e-2)


def test_boundary_edges_excluded():
    from bendcurv import Cylinder

    chart = Cylinder(1.0)
    m = generate_refinement(chart, 3)
    rep = discrete_first_variation(m, NormalField(chart))
    assert rep.boundary_present
    assert rep.excluded_boundary == int(m.boundary.sum())


def test_delta_v_reproducible_and_ordered():
    chart = Torus(2.0, 1.0)
    m = generate_refinement(chart, 4)
    a = discrete_first_variation(m, NormalField(chart))
    b = discrete_first_variation(m, NormalField(chart))
    assert a.delta_V == b.delta_V
    assert np.all(np.diff(a.edge_index) > 0)
    assert a.delta_V == pytest.approx(math.fsum(a.contributions), abs=1e-13)


def test_orientation_flip_negates():
    m = random_convex_polytope(20, seed=4)
    flipped = build_mesh(m.vertices, m.facets[:, ::-1])
    assert sum_length_theta(flipped, "winding") == pytest.approx(
        -sum_length_theta(m, "winding"), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.floats(0.2, 5.0))
def test_rigid_and_scale_invariance(omega, shift, scale):
    m = random_convex_polytope(24, seed=1)
    R = rotation(omega, 1.0)
    moved = m.with_vertices(scale * m.vertices @ R.T + np.asarray(shift))
    a = dihedral_table(m, "winding").theta
    b = dihedral_table(moved, "winding").theta
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_counterexample_pair():
    convex, dimpled = isometric_counterexample_pair()
    np.testing.assert_allclose(np.sort(convex.edge_lengths()), np.sort(dimpled.edge_lengths()),
                               atol=1e-12)
    # each facet keeps its shape
    for f in range(convex.n_facets):
        a = convex.vertices[convex.facets[f]]
        b = dimpled.vertices[dimpled.facets[f]]
        la = np.linalg.norm(a - np.roll(a, 1, axis=0), axis=1)
        lb = np.linalg.norm(b - np.roll(b, 1, axis=0), axis=1)
        np.testing.assert_allclose(la, lb, atol=1e-12)
    gap = sum_length_theta(convex, "winding") - sum_length_theta(dimpled, "winding")
    assert gap > 1e-3
    assert gap == pytest.approx(0.7736951644259804, abs=1e-10)
    assert min_facet_separation(dimpled) > 0.1


def test_counterexample_gap_independent_oracle():
    # closed form: regular icosahedron bends by acos(sqrt5/3) at every edge;
    # pushing a vertex through its link turns the five spoke angles and the
    # five link-edge angles, recomputed here from arccos of facet normals
    V, F = icosahedron()
    convex, dimpled = isometric_counterexample_pair()

    def total(mesh):
        X = mesh.vertices
        n = np.cross(X[F[:, 1]] - X[F[:, 0]], X[F[:, 2]] - X[F[:, 0]])
        n /= np.linalg.norm(n, axis=1)[:, None]
        s = 0.0
        for i in range(len(F)):
            for j in range(i + 1, len(F)):
                shared = set(F[i]) & set(F[j])
                if len(shared) == 2:
                    a, b = shared
                    opp = (set(F[j]) - shared).pop()
                    ang = math.acos(max(-1.0, min(1.0, float(n[i] @ n[j]))))
                    # concave edge when the far vertex lies outside facet i's plane
                    sign = -1.0 if n[i] @ (X[opp] - X[a]) > 1e-12 else 1.0
                    s += np.linalg.norm(X[a] - X[b]) * sign * ang
        return s

    assert total(convex) == pytest.approx(30 * math.acos(math.sqrt(5) / 3), abs=1e-12)
    gap = total(convex) - total(dimpled)
    assert gap == pytest.approx(sum_length_theta(convex, "winding")
                                - sum_length_theta(dimpled, "winding"), abs=1e-12)


def test_edge_csv(tmp_path):
    chart = Sphere(1.0)
    m = generate_refinement(chart, 1)
    rep = discrete_first_variation(m, NormalField(chart))
    path = tmp_path / "e.csv"
    write_edge_csv(m, rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "edge_id,p,q,length,theta,nx,ny,nz,gx,gy,gz,contribution"
    assert len(lines) == 1 + m.n_edges
    row = lines[1].split(",")
    assert float(row[-1]) == rep.contributions[0]
