"""Discrete curvature on triangle meshes.

For an interior edge ``pq`` shared by facets ``pqr`` and ``pqs``:

* ``n(pq)`` is the normalised sum of the two facet normals,
* ``V``, ``W`` are the in-facet unit conormals pointing away from ``r``, ``s``,
* the signed dihedral angle ``theta`` satisfies ``2 sin(theta/2) n(pq) = V + W``
  and ``cos(theta) = n(pqr) . n(pqs)``.

The first variation of the polyhedral surface in a field ``g`` is

    delta_V = sum_edges |p - q| * 2 sin(theta/2) * n(pq) . g(pq)

with ``g(pq)`` the average of ``g`` over the straight segment.
"""
import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import AmbiguousOrientation, FoldedEdge
from .geometry import NormalField
from .mesh import build_mesh


@dataclass
class DihedralRecord:
    edge: tuple
    theta: float
    n_pq: np.ndarray
    V: np.ndarray
    W: np.ndarray
    length: float
    g_pq: np.ndarray = None


@dataclass
class DihedralTable:
    """Vectorised dihedral data for all interior edges, in edge order."""

    edge_index: np.ndarray
    theta: np.ndarray
    n_pq: np.ndarray
    V: np.ndarray
    W: np.ndarray
    length: np.ndarray
    facet_normals: np.ndarray

    def record(self, k):
        return DihedralRecord(int(self.edge_index[k]), float(self.theta[k]), self.n_pq[k],
                              self.V[k], self.W[k], float(self.length[k]))


@dataclass
class VariationReport:
    delta_V: float
    contributions: np.ndarray
    sum_l_theta: float
    mean_curvature_estimate: float
    excluded_boundary: int
    boundary_present: bool
    edge_index: np.ndarray = field(repr=False)
    table: DihedralTable = field(repr=False)
    g_pq: np.ndarray = field(repr=False)


def _reference_normals(mesh, reference):
    if reference is None or (isinstance(reference, str) and reference == "winding"):
        return None
    if isinstance(reference, str):
        if reference != "auto":
            raise ValueError(f"unknown orientation reference {reference!r}")
        if mesh.chart is None or mesh.uv is None:
            return None
        uv = mesh.uv[mesh.facets[:, 0]]
        return mesh.chart.normal(uv[:, 0], uv[:, 1])
    ref = np.asarray(reference, dtype=float)
    return np.broadcast_to(ref, (mesh.n_facets, 3))


def oriented_facet_normals(mesh, reference="auto"):
    """Facet unit normals, flipped to agree with a reference normal.

    ``reference`` is ``"auto"`` (chart normal at the first facet vertex when the
    mesh carries a chart, the winding otherwise), ``"winding"``, or an explicit
    vector / per-facet array.
    """
    FN = kernels.facet_normals(mesh.vertices, mesh.facets)
    ref = _reference_normals(mesh, reference)
    if ref is None:
        return FN
    dot = np.einsum("ij,ij->i", FN, ref)
    if np.any(np.abs(dot) <= 1e-10):
        raise AmbiguousOrientation("facet normal orthogonal to its reference normal")
    return np.where((dot < 0)[:, None], -FN, FN)


def facet_normal(mesh, facet, reference=None):
    """Unit normal of one facet, flipped towards ``reference`` if given."""
    a, b, c = mesh.vertices[mesh.facets[facet]]
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n)
    if reference is None:
        return n
    d = float(n @ np.asarray(reference, dtype=float))
    if abs(d) <= 1e-10:
        raise AmbiguousOrientation("facet normal orthogonal to the reference normal")
    return n if d > 0 else -n


def dihedral_table(mesh, reference="auto", edges=None):
    """Dihedral data for interior edges (all of them, or the given edge indices)."""
    FN = oriented_facet_normals(mesh, reference)
    interior = np.nonzero(~mesh.boundary)[0] if edges is None else np.asarray(edges)
    loc = mesh.edge_local[interior]
    ef = mesh.edge_facets[interior]
    if np.any(ef[:, 1] < 0):
        raise ValueError("dihedral requested on a boundary edge")
    theta, npq, V, W, length, folded = kernels.edge_dihedrals(
        mesh.vertices, FN, ef[:, 0], ef[:, 1],
        loc[:, 0, 0], loc[:, 0, 1], loc[:, 0, 2], loc[:, 1, 0], loc[:, 1, 1], loc[:, 1, 2])
    if np.any(folded):
        k = int(np.nonzero(folded)[0][0])
        raise FoldedEdge(f"edge {tuple(mesh.edges[interior[k]])} is folded (theta -> pi)")
    return DihedralTable(interior, theta, npq, V, W, length, FN)


def _edge_index(mesh, edge):
    if np.ndim(edge) == 0:
        return int(edge)
    a, b = sorted(int(x) for x in mesh.vclass[list(edge)])
    hit = np.nonzero((mesh.edges[:, 0] == a) & (mesh.edges[:, 1] == b))[0]
    if len(hit) == 0:
        raise KeyError(f"no edge {tuple(edge)}")
    return int(hit[0])


def dihedral(mesh, edge, reference="auto"):
    """Single-edge :class:`DihedralRecord`; ``edge`` is an index or a vertex pair."""
    k = _edge_index(mesh, edge)
    if mesh.boundary[k]:
        raise ValueError("boundary edge has no dihedral angle")
    rec = dihedral_table(mesh, reference, edges=[k]).record(0)
    rec.edge = tuple(int(x) for x in mesh.edges[k])
    return rec


# ---------------------------------------------------------------------------
# edge averages of a field


class ConstantField:
    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    def __call__(self, P, seeds=None):
        return np.broadcast_to(self.c, (len(P), 3)).copy()


def as_field(field):
    if isinstance(field, (NormalField, ConstantField)):
        return field
    if callable(field):
        return lambda P, seeds=None: np.asarray(field(P), dtype=float)
    return ConstantField(field)


def edge_average_field(field, p, q, order=8, seeds=None):
    """Average of ``field`` over the straight segments ``p -> q``.

    Gauss-Legendre with ``order`` nodes per segment.  ``p`` and ``q`` are
    single points or ``(E, 3)`` arrays.  ``seeds`` optionally gives
    ``(E, 2, 2)`` parameter values of the endpoints, used to start the
    nearest-point iteration of a :class:`~bendcurv.geometry.NormalField`.
    """
    field = as_field(field)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    single = p.ndim == 1
    p, q = p.reshape(-1, 3), q.reshape(-1, 3)
    if isinstance(field, ConstantField):
        avg = np.broadcast_to(field.c, p.shape).copy()
        return avg[0] if single else avg
    xi, wi = np.polynomial.legendre.leggauss(int(order))
    lam = 0.5 * (xi + 1.0)
    nodes = p[:, None, :] + lam[None, :, None] * (q - p)[:, None, :]
    node_seeds = None
    if seeds is not None:
        s = np.asarray(seeds, dtype=float).reshape(-1, 2, 2)
        node_seeds = (s[:, None, 0, :] + lam[None, :, None] * (s[:, 1] - s[:, 0])[:, None, :])
        node_seeds = node_seeds.reshape(-1, 2)
    vals = field(nodes.reshape(-1, 3), seeds=node_seeds).reshape(len(p), len(xi), 3)
    avg = 0.5 * np.einsum("k,ekj->ej", wi, vals)
    return avg[0] if single else avg


def _segment_seeds(mesh, p_idx, q_idx):
    if mesh.uv is None or mesh.chart is None:
        return None
    a = mesh.uv[p_idx].copy()
    b = mesh.uv[q_idx].copy()
    chart = mesh.chart
    for k in range(2):
        if chart.periodic[k] and not np.any(chart.shifts[k]):
            per = chart.domain[k][1] - chart.domain[k][0]
            b[:, k] -= per * np.round((b[:, k] - a[:, k]) / per)
    return np.stack([a, b], axis=1)


def discrete_first_variation(mesh, field, order=8, reference="auto"):
    """First variation of the polyhedral surface in ``field``.

    Boundary edges are excluded and counted.  Contributions are summed in
    lexicographic edge order with compensated summation.
    """
    table = dihedral_table(mesh, reference)
    idx = table.edge_index
    loc = mesh.edge_local[idx]
    p_idx, q_idx = loc[:, 0, 0], loc[:, 0, 1]
    g = edge_average_field(field, mesh.vertices[p_idx], mesh.vertices[q_idx], order,
                           seeds=_segment_seeds(mesh, p_idx, q_idx))
    g = g.reshape(-1, 3)
    ndotg = np.einsum("ij,ij->i", table.n_pq, g)
    contrib = table.length * (2.0 * np.sin(0.5 * table.theta)) * ndotg
    delta_V = kernels.compensated_sum(contrib)
    excluded = int(mesh.boundary.sum())
    return VariationReport(
        delta_V=delta_V,
        contributions=contrib,
        sum_l_theta=kernels.compensated_sum(table.length * table.theta),
        mean_curvature_estimate=-0.5 * delta_V,
        excluded_boundary=excluded,
        boundary_present=excluded > 0,
        edge_index=idx,
        table=table,
        g_pq=g,
    )


def sum_length_theta(mesh, reference="auto"):
    """``sum |e| theta(e)`` over interior edges."""
    t = dihedral_table(mesh, reference)
    return kernels.compensated_sum(t.length * t.theta)


def write_edge_csv(mesh, report, path):
    """Per-edge records of a :class:`VariationReport`, 17 significant digits."""
    fmt = "{:.17g}".format
    t = report.table
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["edge_id", "p", "q", "length", "theta", "nx", "ny", "nz",
                    "gx", "gy", "gz", "contribution"])
        for k, e in enumerate(report.edge_index.tolist()):
            p, q = mesh.edges[e]
            w.writerow([e, int(p), int(q), fmt(t.length[k]), fmt(t.theta[k]),
                        *map(fmt, t.n_pq[k]), *map(fmt, report.g_pq[k]),
                        fmt(report.contributions[k])])


# ---------------------------------------------------------------------------
# convex / dimpled isometric pair


def icosahedron(edge=1.0):
    """Regular icosahedron with outward winding, deterministic facet order."""
    phi = (1 + math.sqrt(5)) / 2
    V = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            V += [(0, s1, s2 * phi), (s1, s2 * phi, 0), (s2 * phi, 0, s1)]
    V = np.array(V, dtype=float) * (edge / 2.0)
    facets = []
    for i, j, k in itertools.combinations(range(12), 3):
        if all(abs(np.linalg.norm(V[a] - V[b]) - edge) < 1e-9 for a, b in ((i, j), (j, k), (i, k))):
            n = np.cross(V[j] - V[i], V[k] - V[i])
            facets.append((i, j, k) if n @ (V[i] + V[j] + V[k]) > 0 else (i, k, j))
    return V, np.array(facets)


def isometric_counterexample_pair(vertex=0):
    """A regular icosahedron and the copy with one vertex pushed through the
    plane of its (planar, pentagonal) link.  Edge lengths and facet shapes are
    identical; the dihedral angles are not."""
    V, F = icosahedron()
    convex = build_mesh(V, F)
    link = np.unique(F[np.any(F == vertex, axis=1)])
    link = link[link != vertex]
    c = V[link].mean(axis=0)
    _, _, vt = np.linalg.svd(V[link] - c)
    n = vt[-1]
    W = V.copy()
    W[vertex] = V[vertex] - 2.0 * ((V[vertex] - c) @ n) * n
    return convex, convex.with_vertices(W)


def min_facet_separation(mesh, samples=6):
    """Smallest distance between barycentric samples of facets sharing no vertex."""
    lam = [(i / samples, j / samples) for i in range(samples + 1) for j in range(samples + 1 - i)]
    B = np.array([(1 - a - b, a, b) for a, b in lam])
    pts = np.einsum("sk,fkj->fsj", B, mesh.vertices[mesh.facets])
    cls = mesh.vclass[mesh.facets]
    best = np.inf
    for f in range(mesh.n_facets):
        disjoint = ~np.isin(cls, cls[f]).any(axis=1)
        if not disjoint.any():
            continue
        other = pts[disjoint].reshape(-1, 3)
        d = np.linalg.norm(pts[f][:, None, :] - other[None, :, :], axis=-1)
        best = min(best, float(d.min()))
    return best
