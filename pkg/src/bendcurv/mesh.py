"""Triangle meshes with optional periodic vertex identification.

Vertices that are copies of one another across a periodic seam stay separate
(they carry their own, translated, positions) and are tied together by an
equivalence class.  All combinatorics (edges, closedness, counts) work on
classes; all geometry works on the actual vertex positions of each facet.
"""
import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateFacet, NonManifoldEdge, NonOrientable, ParseError

TAU_EPS = 1e-12


def _class_map(n, identify):
    parent = np.arange(n)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for i, j in identify:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    return np.array([find(i) for i in range(n)], dtype=np.int64)


class TriMesh:
    """Immutable triangle complex.  Build with :func:`build_mesh`.

    Attributes
    ----------
    vertices : (N, 3) float array
    facets : (F, 3) int array, consistently wound
    vclass : (N,) representative vertex of each identification class
    edges : (E, 2) sorted class pairs, lexicographically ordered
    edge_facets : (E, 2) incident facets, ``-1`` marks a missing second facet
    edge_local : (E, 2, 3) actual vertex indices ``(p, q, opposite)`` of the
        edge inside each incident facet
    boundary : (E,) bool
    """

    def __init__(self, vertices, facets, vclass, identify, edges, edge_facets, edge_local,
                 uv=None, chart=None):
        self.vertices = vertices
        self.facets = facets
        self.vclass = vclass
        self.identify = identify
        self.edges = edges
        self.edge_facets = edge_facets
        self.edge_local = edge_local
        self.boundary = edge_facets[:, 1] < 0
        self.uv = uv
        self.chart = chart
        for a in (vertices, facets, vclass, edges, edge_facets, edge_local):
            a.setflags(write=False)

    @property
    def n_vertices(self):
        return int(len(np.unique(self.vclass)))

    @property
    def n_edges(self):
        return int(len(self.edges))

    @property
    def n_facets(self):
        return int(len(self.facets))

    @property
    def closed(self):
        return self.n_facets > 0 and not bool(self.boundary.any())

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_facets

    def edge_lengths(self):
        p = self.edge_local[:, 0, 0]
        q = self.edge_local[:, 0, 1]
        return np.linalg.norm(self.vertices[q] - self.vertices[p], axis=1)

    def with_vertices(self, vertices, chart=None):
        """Same combinatorics, new positions (used to transport meshes along flows)."""
        vertices = np.array(vertices, dtype=float)
        if vertices.shape != self.vertices.shape:
            raise ValueError("vertex array shape changed")
        return TriMesh(vertices, self.facets, self.vclass, self.identify, self.edges,
                       self.edge_facets, self.edge_local, self.uv,
                       self.chart if chart is None else chart)

    def __repr__(self):
        return (f"TriMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_facets}, "
                f"closed={self.closed})")


def _orient(facets, vclass, he_edge, he_forward, n_edges):
    """Flip facets so every interior edge is traversed in opposite directions."""
    nf = len(facets)
    # half-edges grouped per edge
    order = np.argsort(he_edge, kind="stable")
    counts = np.bincount(he_edge, minlength=n_edges)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    interior = np.nonzero(counts == 2)[0]
    h1 = order[starts[interior]]
    h2 = order[starts[interior] + 1]
    consistent = he_forward[h1] != he_forward[h2]
    if consistent.all():
        return facets
    f1, f2 = h1 // 3, h2 // 3
    # same_dir edge -> neighbours must have opposite flip state
    adj = [[] for _ in range(nf)]
    for a, b, c in zip(f1.tolist(), f2.tolist(), consistent.tolist()):
        adj[a].append((b, c))
        adj[b].append((a, c))
    flip = np.full(nf, -1, dtype=np.int8)
    for root in range(nf):
        if flip[root] >= 0:
            continue
        flip[root] = 0
        queue = deque([root])
        while queue:
            f = queue.popleft()
            for g, same_ok in adj[f]:
                want = flip[f] if same_ok else 1 - flip[f]
                if flip[g] < 0:
                    flip[g] = want
                    queue.append(g)
                elif flip[g] != want:
                    raise NonOrientable("facet windings cannot be made consistent")
    out = facets.copy()
    sel = flip == 1
    out[sel] = out[sel][:, [0, 2, 1]]
    return out


def _edge_table(ca, cb, n):
    # lexicographic order of (lo, hi) == numeric order of lo * n + hi
    key = np.minimum(ca, cb) * n + np.maximum(ca, cb)
    uniq, inverse = np.unique(key, return_inverse=True)
    return np.stack([uniq // n, uniq % n], axis=1), inverse.reshape(-1)


def build_mesh(vertices, facets, identifications=None, uv=None, chart=None):
    """Validate and assemble a :class:`TriMesh`.

    Edges are derived from the facets, windings are made consistent by
    breadth-first propagation and boundary edges are flagged.
    """
    V = np.array(vertices, dtype=float).reshape(-1, 3)
    Fc = np.array(facets, dtype=np.int64).reshape(-1, 3)
    n = len(V)
    if len(Fc) and (Fc.min() < 0 or Fc.max() >= n):
        raise IndexError("facet index out of range")
    identify = [tuple(map(int, pair)) for pair in (identifications or [])]
    vclass = _class_map(n, identify)

    if len(Fc) == 0:
        empty2 = np.zeros((0, 2), dtype=np.int64)
        return TriMesh(V, Fc, vclass, identify, empty2, empty2.copy(),
                       np.zeros((0, 2, 3), dtype=np.int64),
                       None if uv is None else np.asarray(uv, float), chart)

    C = vclass[Fc]
    if np.any((C[:, 0] == C[:, 1]) | (C[:, 1] == C[:, 2]) | (C[:, 0] == C[:, 2])):
        raise DegenerateFacet("facet with a repeated vertex")
    key = np.sort(C, axis=1)
    key = (key[:, 0] * n + key[:, 1]) * n + key[:, 2]
    if len(np.unique(key)) != len(Fc):
        raise DegenerateFacet("repeated facet")
    tau = kernels.facet_tau(V, Fc)
    if np.any(~(tau > TAU_EPS)):
        bad = int(np.argmin(np.where(np.isnan(tau), -1.0, tau)))
        raise DegenerateFacet(f"facet {bad} has collinear vertices")

    # half-edges (a -> b) with opposite vertex
    a = Fc.reshape(-1)
    b = Fc[:, [1, 2, 0]].reshape(-1)
    ca, cb = vclass[a], vclass[b]
    edges, he_edge = _edge_table(ca, cb, n)
    counts = np.bincount(he_edge, minlength=len(edges))
    if counts.max() > 2:
        e = edges[int(np.argmax(counts))]
        raise NonManifoldEdge(f"edge {tuple(e)} has {counts.max()} incident facets")

    Fc = _orient(Fc, vclass, he_edge, ca < cb, len(edges))

    # rebuild half-edge tables on the oriented facets
    a = Fc.reshape(-1)
    b = Fc[:, [1, 2, 0]].reshape(-1)
    o = Fc[:, [2, 0, 1]].reshape(-1)
    ca, cb = vclass[a], vclass[b]
    edges2, he_edge = _edge_table(ca, cb, n)
    order = np.argsort(he_edge, kind="stable")
    counts = np.bincount(he_edge, minlength=len(edges2))
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    h1 = order[starts]
    h2 = np.where(counts == 2, order[np.minimum(starts + 1, len(order) - 1)], -1)
    edge_facets = np.stack([h1 // 3, np.where(h2 >= 0, h2 // 3, -1)], axis=1)
    local = np.full((len(edges2), 2, 3), -1, dtype=np.int64)
    local[:, 0] = np.stack([a[h1], b[h1], o[h1]], axis=1)
    has2 = h2 >= 0
    hh = h2[has2]
    local[has2, 1] = np.stack([a[hh], b[hh], o[hh]], axis=1)
    return TriMesh(V, Fc, vclass, identify, edges2, edge_facets, local,
                   None if uv is None else np.asarray(uv, float), chart)


# ---------------------------------------------------------------------------
# regularity


@dataclass(frozen=True)
class RegularityReport:
    tau: float
    lam: float
    L: float
    n_vertices: int
    n_edges: int
    n_facets: int
    sum_L2: float
    sum_L3: float
    closed: bool

    def as_dict(self):
        return {"tau": self.tau, "lambda": self.lam, "L": self.L,
                "n_vertices": self.n_vertices, "n_edges": self.n_edges,
                "n_facets": self.n_facets, "sum_L2": self.sum_L2,
                "sum_L3": self.sum_L3, "closed": self.closed}


def regularity_report(mesh):
    """Worst facet nondegeneracy ``tau``, length ratio ``lambda`` and the
    edge sums ``card(T1) L^2`` and ``card(T1) L^3`` with ``L`` the maximum
    edge length."""
    tau = kernels.facet_tau(mesh.vertices, mesh.facets)
    lengths = mesh.edge_lengths()
    L = float(lengths.max()) if len(lengths) else 0.0
    lam = float(lengths.min() / L) if len(lengths) else 0.0
    ne = mesh.n_edges
    return RegularityReport(
        tau=float(tau.min()) if len(tau) else 0.0, lam=lam, L=L,
        n_vertices=mesh.n_vertices, n_edges=ne, n_facets=mesh.n_facets,
        sum_L2=ne * L**2, sum_L3=ne * L**3, closed=mesh.closed,
    )


# ---------------------------------------------------------------------------
# refinement of charts


def _split_cells(P, c00, c10, c01, c11):
    """Pick the diagonal of every quad that maximises the worse facet tau."""
    fa = np.stack([np.stack([c00, c10, c11], 1), np.stack([c00, c11, c01], 1)])
    fb = np.stack([np.stack([c00, c10, c01], 1), np.stack([c10, c11, c01], 1)])
    ta = np.minimum(kernels.facet_tau(P, fa[0]), kernels.facet_tau(P, fa[1]))
    tb = np.minimum(kernels.facet_tau(P, fb[0]), kernels.facet_tau(P, fb[1]))
    use_b = tb > ta + 1e-12
    first = np.where(use_b[:, None], fb[0], fa[0])
    second = np.where(use_b[:, None], fb[1], fa[1])
    return np.stack([first, second], axis=1).reshape(-1, 3)


def _axis_lengths(chart, samples=64):
    (u0, u1), (v0, v1) = chart.domain
    us = u0 + (np.arange(samples) + 0.5) * (u1 - u0) / samples
    vs = v0 + (np.arange(samples) + 0.5) * (v1 - v0) / samples
    U, Vg = np.meshgrid(us, vs, indexing="ij")
    _, xu, xv, *_ = chart.derivatives(U, Vg)
    lu = np.linalg.norm(xu, axis=-1).mean() * (u1 - u0)
    lv = np.linalg.norm(xv, axis=-1).mean() * (v1 - v0)
    return lu, lv


def grid_cells(chart, level):
    """Cells per axis: ``2**level`` along the metrically longer axis."""
    lengths = _axis_lengths(chart)
    longest = max(lengths)
    out = []
    for k in range(2):
        m = 3 if chart.periodic[k] else 1
        out.append(max(m, int(round(2**level * lengths[k] / longest))))
    return tuple(out)


def grid_mesh(chart, nu, nv):
    """Structured triangulation of a rectangular chart domain.

    Genuinely periodic axes wrap around modulo the cell count; translation
    periodic axes keep a seam copy of the first row of vertices, identified
    with it.
    """
    (u0, u1), (v0, v1) = chart.domain
    n = (nu, nv)
    wrap = [chart.periodic[k] and not np.any(chart.shifts[k]) for k in range(2)]
    nodes = [n[k] if wrap[k] else n[k] + 1 for k in range(2)]
    us = u0 + np.arange(nodes[0]) * (u1 - u0) / nu
    vs = v0 + np.arange(nodes[1]) * (v1 - v0) / nv
    U, Vg = np.meshgrid(us, vs, indexing="ij")
    uv = np.stack([U.ravel(), Vg.ravel()], axis=1)
    P = chart.points(uv)

    def vid(i, k):
        if wrap[0]:
            i = i % nu
        if wrap[1]:
            k = k % nv
        return i * nodes[1] + k

    I, K = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    I, K = I.ravel(), K.ravel()
    facets = _split_cells(P, vid(I, K), vid(I + 1, K), vid(I, K + 1), vid(I + 1, K + 1))

    identify = []
    for k in range(2):
        if chart.periodic[k] and not wrap[k]:
            if k == 0:
                for kk in range(nodes[1]):
                    identify.append((vid(nu, kk), vid(0, kk)))
            else:
                for ii in range(nodes[0]):
                    identify.append((vid(ii, nv), vid(ii, 0)))
    return build_mesh(P, facets, identify, uv=uv, chart=chart)


def generate_refinement(chart, level):
    """Level-``j`` triangulation of a builtin chart (``2**j`` cells along the
    longer axis, or per cube face for the sphere)."""
    if level < 0:
        raise ValueError("level must be >= 0")
    mesh = chart.refinement(level)
    if mesh is not None:
        return mesh
    return grid_mesh(chart, *grid_cells(chart, level))


def warp_parameters(mesh, amplitude):
    """Re-place the vertices after the smooth parameter map
    ``u -> u + amplitude * P / (2 pi) * sin(2 pi (u - u0) / P + 1)`` on periodic
    axes (period ``P``) and ``u -> u + amplitude * P / pi * sin(pi (u - u0) / P)``
    on bounded ones, which fixes the ends.  ``|amplitude| < 1`` keeps the map
    monotone.  Used to break the symmetries of structured grids while keeping a
    smooth, level-independent family of triangulations.
    """
    if mesh.uv is None or mesh.chart is None:
        raise ValueError("mesh carries no chart parameters")
    if amplitude == 0:
        return mesh
    if not abs(amplitude) < 1:
        raise ValueError("warp amplitude must satisfy |amplitude| < 1")
    chart = mesh.chart
    uv = mesh.uv.copy()
    for k in range(2):
        a, b = chart.domain[k]
        P = b - a
        if chart.periodic[k]:
            uv[:, k] += amplitude * P / (2 * np.pi) * np.sin(2 * np.pi * (uv[:, k] - a) / P + 1.0)
        else:
            uv[:, k] += amplitude * P / np.pi * np.sin(np.pi * (uv[:, k] - a) / P)
    return build_mesh(chart.points(uv), mesh.facets, mesh.identify, uv=uv, chart=chart)


_CUBE_FACES = [
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
]


def cube_sphere(chart, level):
    """Equiangular cubed-sphere triangulation with ``2**level`` cells per face edge."""
    N = 2**level
    ids = np.arange(N + 1)
    I, K = np.meshgrid(ids, ids, indexing="ij")
    lattice = []
    for c, e1, e2 in _CUBE_FACES:
        c, e1, e2 = map(np.array, (c, e1, e2))
        pts = N * c + (2 * I.ravel() - N)[:, None] * e1 + (2 * K.ravel() - N)[:, None] * e2
        lattice.append(pts)
    lattice = np.concatenate(lattice)
    base = 2 * N + 1
    key = ((lattice[:, 0] + N) * base + lattice[:, 1] + N) * base + lattice[:, 2] + N
    ukey, inverse = np.unique(key, return_inverse=True)
    uniq = np.stack([ukey // base**2, (ukey // base) % base, ukey % base], axis=1) - N
    inverse = inverse.reshape(6, N + 1, N + 1)
    Q = np.tan(uniq * (math.pi / (4 * N)))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    # Sphere's chart frame is a cyclic permutation of the canonical one
    Q = Q[:, list(chart._perm)] if hasattr(chart, "_perm") else Q
    P = chart.r * Q
    facets = []
    for f in range(6):
        g = inverse[f]
        c00 = g[:-1, :-1].ravel()
        c10 = g[1:, :-1].ravel()
        c01 = g[:-1, 1:].ravel()
        c11 = g[1:, 1:].ravel()
        facets.append(_split_cells(P, c00, c10, c01, c11))
    uv, _ = chart.closest_point(P)
    return build_mesh(P, np.concatenate(facets), uv=uv, chart=chart)


# ---------------------------------------------------------------------------
# OFF input / output


def write_off(mesh, path):
    """Write ``mesh`` as OFF (17 significant digits) plus a sidecar
    ``<path>.json`` holding ``{"identify": [[i, j], ...]}`` when needed."""
    lines = ["OFF", f"{len(mesh.vertices)} {mesh.n_facets} {mesh.n_edges}"]
    lines += [" ".join(f"{c:.17g}" for c in v) for v in mesh.vertices.tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.facets.tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if mesh.identify:
        with open(str(path) + ".json", "w") as fh:
            json.dump({"identify": [list(p) for p in mesh.identify]}, fh)


def read_off(path, sidecar=None):
    """Parse an OFF triangle file; identifications come from ``sidecar``
    (default ``<path>.json`` when it exists)."""
    import os

    with open(path) as fh:
        raw = fh.read().splitlines()
    rows = []
    for lineno, text in enumerate(raw, 1):
        text = text.split("#", 1)[0].strip()
        if text:
            rows.append((lineno, text.split()))
    if not rows or rows[0][1][0] != "OFF":
        raise ParseError("missing OFF header", rows[0][0] if rows else 1)
    header = rows[0][1][1:]
    pos = 1
    if not header:
        if len(rows) < 2:
            raise ParseError("missing counts line", rows[0][0])
        lineno, header = rows[1]
        pos = 2
    try:
        nv, nf = int(header[0]), int(header[1])
    except (IndexError, ValueError):
        raise ParseError("bad counts line", rows[pos - 1][0]) from None
    if len(rows) < pos + nv + nf:
        raise ParseError("file ends before all vertices/facets were read",
                         rows[-1][0] if rows else 1)
    verts = []
    for lineno, tok in rows[pos:pos + nv]:
        try:
            verts.append([float(t) for t in tok[:3]])
        except ValueError:
            raise ParseError("bad vertex coordinates", lineno) from None
        if len(tok) < 3:
            raise ParseError("vertex needs three coordinates", lineno)
    facets = []
    for lineno, tok in rows[pos + nv:pos + nv + nf]:
        try:
            k = int(tok[0])
            idx = [int(t) for t in tok[1:1 + k]]
        except (ValueError, IndexError):
            raise ParseError("bad facet line", lineno) from None
        if k != 3 or len(idx) != 3:
            raise ParseError("only triangular facets are supported", lineno)
        if min(idx) < 0 or max(idx) >= nv:
            raise ParseError(f"facet index out of range 0..{nv - 1}", lineno)
        facets.append(idx)
    if sidecar is None and os.path.exists(str(path) + ".json"):
        sidecar = str(path) + ".json"
    identify = None
    if sidecar is not None:
        with open(sidecar) as fh:
            identify = json.load(fh).get("identify", [])
    return build_mesh(np.array(verts, dtype=float).reshape(-1, 3),
                      np.array(facets, dtype=np.int64).reshape(-1, 3), identify)
