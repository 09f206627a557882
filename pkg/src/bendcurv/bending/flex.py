"""Continuous flexes of polyhedra by predictor-corrector continuation.

Unknowns are all vertex coordinates.  Constraints are the squared edge
lengths plus six gauge rows pinning vertex ``g0`` to the origin, ``g1`` to
the x axis and ``g2`` to the xy plane, which removes the rigid motions.
"""
import math

import numpy as np

from ..errors import BranchPoint, RigidConfiguration
from ..mesh import build_mesh

NULL_RTOL = 1e-8


def gauge_fix(X, gauge=(0, 1, 2)):
    """Rigidly move ``X`` so that the gauge conditions hold exactly."""
    g0, g1, g2 = gauge
    Y = np.asarray(X, dtype=float) - X[g0]
    e1 = Y[g1] / np.linalg.norm(Y[g1])
    w = Y[g2] - (Y[g2] @ e1) * e1
    e2 = w / np.linalg.norm(w)
    Q = np.stack([e1, e2, np.cross(e1, e2)])
    Y = Y @ Q.T
    Y[g0] = 0.0
    Y[g1, 1:] = 0.0
    Y[g2, 2] = 0.0
    return Y


class _System:
    def __init__(self, mesh, gauge):
        self.mesh = mesh
        self.gauge = gauge
        loc = mesh.edge_local[:, 0]
        self.p = loc[:, 0]
        self.q = loc[:, 1]
        d = mesh.vertices[self.q] - mesh.vertices[self.p]
        self.len2 = np.einsum("ij,ij->i", d, d)
        self.n = 3 * len(mesh.vertices)
        g0, g1, g2 = gauge
        self.gauge_cols = [3 * g0, 3 * g0 + 1, 3 * g0 + 2, 3 * g1 + 1, 3 * g1 + 2, 3 * g2 + 2]

    def residual(self, x):
        X = x.reshape(-1, 3)
        d = X[self.q] - X[self.p]
        r = np.einsum("ij,ij->i", d, d) - self.len2
        return np.concatenate([r, x[self.gauge_cols]])

    def jacobian(self, x):
        X = x.reshape(-1, 3)
        d = X[self.q] - X[self.p]
        ne = len(d)
        J = np.zeros((ne + 6, self.n))
        rows = np.arange(ne)
        for k in range(3):
            J[rows, 3 * self.q + k] = 2 * d[:, k]
            J[rows, 3 * self.p + k] = -2 * d[:, k]
        J[ne + np.arange(6), self.gauge_cols] = 1.0
        return J

    def pin(self, x):
        x = x.copy()
        x[self.gauge_cols] = 0.0
        return x

    def tangent(self, x, previous=None):
        J = self.jacobian(x)
        _, sv, vt = np.linalg.svd(J)
        sv = np.concatenate([sv, np.zeros(self.n - len(sv))])
        null = np.nonzero(sv <= NULL_RTOL * sv[0])[0]
        if len(null) == 0:
            raise RigidConfiguration("constraint Jacobian has no null direction beyond gauge")
        if len(null) > 1:
            raise BranchPoint(f"null space of dimension {len(null)}")
        T = vt[null[0]]
        if previous is not None:
            if T @ previous < 0:
                T = -T
        elif T[np.argmax(np.abs(T))] < 0:
            T = -T
        return T


class PolyFlex:
    """A traced flex: vertex positions at every ``t`` of ``t_grid``.

    ``positions(t)`` for other times continues from the nearest traced node.
    The flex parameter is pseudo-arclength in coordinate space times ``speed``.
    """

    def __init__(self, mesh, gauge, t_grid, X, tangents, speed, max_step):
        self.reference = mesh
        self.gauge = gauge
        self.t_grid = np.asarray(t_grid, dtype=float)
        self.X = X
        self.tangents = tangents
        self.speed = speed
        self.max_step = max_step
        self._system = _System(mesh, gauge)
        self.name = "flex"

    def positions(self, t):
        k = int(np.argmin(np.abs(self.t_grid - t)))
        if t == self.t_grid[k]:
            return self.X[k].reshape(-1, 3).copy()
        x, _ = _advance(self._system, self.X[k], self.tangents[k],
                        (t - self.t_grid[k]) * self.speed, self.max_step)
        return x.reshape(-1, 3)

    def mesh_at(self, t):
        return self.reference.with_vertices(self.positions(t))

    def edge_drift(self):
        """Largest relative edge-length change over the traced nodes."""
        L0 = np.sqrt(self._system.len2)
        worst = 0.0
        for x in self.X:
            X = x.reshape(-1, 3)
            L = np.linalg.norm(X[self._system.q] - X[self._system.p], axis=1)
            worst = max(worst, float(np.max(np.abs(L - L0) / L0)))
        return worst

    def gauge_error(self):
        return max(float(np.abs(x[self._system.gauge_cols]).max()) for x in self.X)


def _correct(system, x_pred, T, tol=1e-15, max_iter=30):
    x = x_pred.copy()
    scale = 1.0 + float(np.abs(x_pred).max())
    for _ in range(max_iter):
        r = system.residual(x)
        r = np.concatenate([r, [T @ (x - x_pred)]])
        J = np.vstack([system.jacobian(x), T[None, :]])
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        x = x + dx
        if np.abs(dx).max() <= tol * scale:
            break
    else:
        res = float(np.abs(system.residual(x)).max())
        if res > 1e-12 * scale**2:
            raise BranchPoint(f"corrector failed to converge (residual {res:.3g})")
    return system.pin(x)


def _advance(system, x, T, arclength, max_step):
    if arclength == 0.0:
        return x.copy(), T
    direction = 1.0 if arclength > 0 else -1.0
    n = max(1, int(math.ceil(abs(arclength) / max_step - 1e-12)))
    ds = arclength / n
    for _ in range(n):
        Ts = T * direction
        x = _correct(system, x + abs(ds) * Ts, Ts)
        T = system.tangent(x, T)
    return x, T


def flex_continuation(seed, t_grid, speed=1.0, gauge=(0, 1, 2), max_step=0.02):
    """Trace the one-parameter flex of ``seed`` (a :class:`TriMesh`) over ``t_grid``.

    Edge lengths are taken from the seed geometry.  Raises
    :class:`RigidConfiguration` when the seed does not flex and
    :class:`BranchPoint` (with ``last_t``) when the null space changes dimension.
    """
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    X0 = gauge_fix(seed.vertices, gauge)
    mesh = seed.with_vertices(X0)
    system = _System(mesh, gauge)
    x = system.pin(X0.ravel())
    T = system.tangent(x)
    xs, ts = [x], [T]
    t_prev = 0.0
    if t_grid[0] != 0.0:
        x, T = _advance(system, x, T, t_grid[0] * speed, max_step)
        xs, ts = [x], [T]
        t_prev = t_grid[0]
    for t in t_grid[1:]:
        try:
            x, T = _advance(system, x, T, (t - t_prev) * speed, max_step)
        except BranchPoint as exc:
            raise BranchPoint(str(exc), last_t=t_prev) from None
        xs.append(x)
        ts.append(T)
        t_prev = t
    return PolyFlex(mesh, gauge, t_grid, xs, ts, speed, max_step)


def octahedron_facets():
    """Facets of the octahedron on vertices ``a, b, c, a', b', c'`` (indices 0..5),
    wound like the outward regular octahedron with ``a, b, c -> +x, +y, +z``."""
    facets = []
    for sa in (0, 1):
        for sb in (0, 1):
            for sc in (0, 1):
                tri = (0 + 3 * sa, 1 + 3 * sb, 2 + 3 * sc)
                flips = sa + sb + sc
                facets.append(tri if flips % 2 == 0 else (tri[0], tri[2], tri[1]))
    return np.array(facets)


BRICARD_SEED = np.array([[1.0, 0.3, 0.2], [0.2, 1.1, -0.35], [-0.45, 0.55, 0.95]])


def bricard_seed(abc=BRICARD_SEED):
    """Line-symmetric (type I) Bricard octahedron.

    Opposite vertices are exchanged by the half-turn about the z axis, which
    makes the octahedron flexible.  It is self-intersecting, as every Bricard
    octahedron is.
    """
    abc = np.asarray(abc, dtype=float)
    half_turn = np.diag([-1.0, -1.0, 1.0])
    X = np.vstack([abc, abc @ half_turn])
    return build_mesh(X, octahedron_facets())


def tetrahedron():
    X = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return build_mesh(X, [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])
