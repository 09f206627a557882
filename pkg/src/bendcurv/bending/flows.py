"""Time-indexed families of surfaces: smooth charts and vertex flows."""
import math

import numpy as np

from ..geometry import Corrugation, RigidChart, SurfaceChart, chart_from_spec
from ..mesh import generate_refinement, warp_parameters


def _poly(coeffs):
    coeffs = [float(c) for c in np.atleast_1d(coeffs)]
    return lambda t: sum(c * t**k for k, c in enumerate(coeffs))


def rotation(omega, t):
    """``exp(t [omega]_x)`` by Rodrigues' formula."""
    w = np.asarray(omega, dtype=float) * t
    th = np.linalg.norm(w)
    if th == 0.0:
        return np.eye(3)
    k = w / th
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(th) * K + (1 - math.cos(th)) * K @ K


class SmoothFlow:
    """A family ``t -> chart(t)`` over a fixed parameter domain."""

    def __init__(self, chart_at, isometric, name, closed=False, params=None):
        self._chart_at = chart_at
        self.isometric = isometric
        self.name = name
        self.closed = closed
        self.params = params or {}

    def chart(self, t):
        return self._chart_at(float(t))

    def reference_mesh(self, level):
        """Level-``j`` triangulation at ``t = 0``; later times transport it."""
        return generate_refinement(self.chart(0.0), level)

    def transport(self, mesh, t):
        """Move every vertex with the flow, keeping its parameter values."""
        c = self.chart(t)
        return mesh.with_vertices(c.points(mesh.uv), chart=c)


def rigid_flow(chart, omega=(0.3, -0.2, 0.5), velocity=(0.1, 0.2, -0.1)):
    if isinstance(chart, dict):
        chart = chart_from_spec(chart)
    omega = np.asarray(omega, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    return SmoothFlow(lambda t: RigidChart(chart, rotation(omega, t), t * velocity),
                      True, "rigid", closed=all(chart.periodic) or chart.name == "sphere",
                      params={"surface": chart.params(), "omega": omega.tolist(),
                              "velocity": velocity.tolist()})


class RolledStrip(SurfaceChart):
    """Flat strip ``[0, length] x [0, width]`` rolled onto a cylinder of radius ``r``:
    ``(s, y) -> (r sin(s/r), y, r (1 - cos(s/r)))``."""

    name = "rolled_strip"

    def __init__(self, r, length=1.0, width=1.0):
        super().__init__(((0.0, float(length)), (0.0, float(width))))
        self.r = float(r)

    def derivatives(self, u, v):
        s, y = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        r = self.r
        c, sn = np.cos(s / r), np.sin(s / r)
        z = np.zeros(s.shape)
        o = np.ones(s.shape)
        x = np.stack([r * sn, y, r * (1 - c)], -1)
        xs = np.stack([c, z, sn], -1)
        xy = np.stack([z, o, z], -1)
        xss = np.stack([-sn / r, z, c / r], -1)
        zero3 = np.stack([z, z, z], -1)
        return x, xs, xy, xss, zero3, zero3

    def closest_point(self, P):
        r = self.r
        th = np.arctan2(P[:, 0], r - P[:, 2])
        uv = np.column_stack([r * th, P[:, 1]])
        return uv, self.points(uv)

    def params(self):
        return {"surface": "rolled_strip", "r": self.r, "length": self.domain[0][1],
                "width": self.domain[1][1]}


def cylinder_flow(radius=(1.0, 0.5), length=1.0, width=1.0):
    """Strip rolled to radius ``r(t)``; ``radius`` is a callable or polynomial coefficients."""
    r_of_t = radius if callable(radius) else _poly(radius)

    def chart_at(t):
        r = r_of_t(t)
        if not r > 0:
            raise ValueError(f"cylinder radius r({t}) = {r} is not positive")
        return RolledStrip(r, length, width)

    return SmoothFlow(chart_at, True, "cylinder",
                      params={"r": None if callable(radius) else list(np.atleast_1d(radius)),
                              "length": length, "width": width})


def corrugation_flow(a=(0.3, 0.2), S=2 * math.pi, w=1.0):
    """Corrugation with amplitude polynomial ``a(t) = a[0] + a[1] t + ...``."""
    a_of_t = _poly(a)
    return SmoothFlow(lambda t: Corrugation(a_of_t(t), S, w), True, "corrugation", closed=True,
                      params={"a": [float(c) for c in np.atleast_1d(a)], "S": S, "w": w})


def flow_from_spec(spec):
    """Build a flow from ``{"flow": "corrugation", "a": [...], "S": ..., "w": ...}`` etc."""
    spec = dict(spec)
    kind = spec.pop("flow")
    if kind == "corrugation":
        return corrugation_flow(spec.get("a", (0.3, 0.2)), spec.get("S", 2 * math.pi),
                                spec.get("w", 1.0))
    if kind == "cylinder":
        return cylinder_flow(spec.get("r", (1.0, 0.5)), spec.get("length", 1.0),
                             spec.get("width", 1.0))
    if kind == "rigid":
        return rigid_flow(chart_from_spec(spec["surface"]), spec.get("omega", (0.3, -0.2, 0.5)),
                          spec.get("velocity", (0.1, 0.2, -0.1)))
    raise ValueError(f"unknown smooth flow {kind!r}")


def isometry_defect(flow, n_points=20, times=(0.0, 0.25, 0.5, 0.75, 1.0), seed=0):
    """Largest change of ``(E, F, G)`` over ``times`` at random parameter points."""
    rng = np.random.default_rng(seed)
    c0 = flow.chart(times[0])
    (u0, u1), (v0, v1) = c0.domain
    uv = np.column_stack([rng.uniform(u0, u1, n_points), rng.uniform(v0, v1, n_points)])

    def forms(c):
        _, xu, xv, *_ = c.derivatives(uv[:, 0], uv[:, 1])
        return np.stack([(xu * xu).sum(-1), (xu * xv).sum(-1), (xv * xv).sum(-1)])

    ref = forms(c0)
    return max(float(np.abs(forms(flow.chart(t)) - ref).max()) for t in times)


class TriangulatedFlow:
    """A smooth flow sampled on a fixed level-``j`` triangulation.

    ``warp`` re-places the reference vertices after a smooth parameter map
    (see :func:`~bendcurv.mesh.warp_parameters`).
    """

    def __init__(self, flow, level, warp=0.0):
        self.flow = flow
        self.level = level
        self.reference = warp_parameters(flow.reference_mesh(level), warp)

    def mesh_at(self, t):
        return self.flow.transport(self.reference, t)


class VertexFlow:
    """Vertex positions given by ``positions(t)`` on fixed combinatorics."""

    def __init__(self, mesh, positions, name="vertex-flow"):
        self.reference = mesh
        self.positions = positions
        self.name = name

    def mesh_at(self, t):
        return self.reference.with_vertices(self.positions(float(t)))


def rigid_vertex_flow(mesh, omega=(0.3, -0.2, 0.5), velocity=(0.1, 0.2, -0.1)):
    X = mesh.vertices.copy()
    v = np.asarray(velocity, dtype=float)
    return VertexFlow(mesh, lambda t: X @ rotation(omega, t).T + t * v, "rigid")


def scaling_vertex_flow(mesh):
    X = mesh.vertices.copy()
    return VertexFlow(mesh, lambda t: (1.0 + t) * X, "scaling")


def random_smooth_vertex_flow(mesh, seed=0, amplitude=0.05):
    """``x(t) = x + A sin(t) + B (1 - cos(t))`` with random ``A``, ``B``."""
    rng = np.random.default_rng(seed)
    X = mesh.vertices.copy()
    A = amplitude * rng.standard_normal(X.shape)
    B = amplitude * rng.standard_normal(X.shape)
    return VertexFlow(mesh, lambda t: X + A * math.sin(t) + B * (1 - math.cos(t)), "random")
