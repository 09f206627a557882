"""Analytic parametric surfaces and the smooth quantities living on them.

Sign convention: the shape operator is ``S = -dn`` for the chart normal
``n = x_u x x_v / |x_u x x_v|`` so that ``H n`` is the mean curvature vector.
The unit sphere with its outward chart normal therefore has ``H = -1``.
"""
import math
import threading
from collections import namedtuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateChart, DomainExit, OutsideTube

DEGENERATE_EPS = 1e-14

FundamentalForms = namedtuple("FundamentalForms", "E F G e f g2 n")
GeodesicPath = namedtuple("GeodesicPath", "s uv xyz")


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _as_uv(uv):
    uv = np.asarray(uv, dtype=float)
    return uv[..., 0], uv[..., 1]


class SurfaceChart:
    """A parametrised surface patch ``(u, v) -> R^3``.

    Subclasses implement :meth:`derivatives`, returning the point and its
    partial derivatives up to second order.  ``periodic`` flags an axis as
    periodic; ``shifts[k]`` is the ambient translation picked up after one
    period along axis ``k`` (zero for genuinely periodic maps, nonzero for
    translation-periodic surfaces such as corrugations).
    """

    name = "chart"
    analytic = True
    seed_resolution = 256

    def __init__(self, domain, periodic=(False, False), shifts=None):
        self.domain = tuple((float(a), float(b)) for a, b in domain)
        self.periodic = tuple(bool(p) for p in periodic)
        self.shifts = np.zeros((2, 3)) if shifts is None else np.asarray(shifts, dtype=float)
        self._seed_lock = threading.Lock()
        self._seed_tree = None

    # -- evaluation -----------------------------------------------------
    def derivatives(self, u, v):
        """Return ``(x, x_u, x_v, x_uu, x_uv, x_vv)`` broadcast over ``u, v``."""
        raise NotImplementedError

    def point(self, u, v):
        return self.derivatives(u, v)[0]

    def points(self, uv):
        u, v = _as_uv(uv)
        return self.point(u, v)

    def normal(self, u, v):
        _, xu, xv, *_ = self.derivatives(u, v)
        n = np.cross(xu, xv)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def closest_point(self, P):
        """Analytic nearest point, ``(uv, rho)``; ``None`` when no closed form exists."""
        return None

    def refinement(self, level):
        """Hook for charts that need a non-grid triangulation (the sphere)."""
        return None

    def params(self):
        return {"surface": self.name}

    @property
    def period(self):
        return tuple(b - a for a, b in self.domain)

    def wrap(self, uv):
        """Reduce genuinely periodic coordinates into the domain."""
        uv = np.array(uv, dtype=float)
        for k in range(2):
            if self.periodic[k] and not np.any(self.shifts[k]):
                a, b = self.domain[k]
                uv[..., k] = a + np.mod(uv[..., k] - a, b - a)
        return uv

    # -- seed grid for the retraction ---------------------------------
    def seed_tree(self):
        with self._seed_lock:
            if self._seed_tree is None:
                n = self.seed_resolution
                axes = []
                for k in range(2):
                    a, b = self.domain[k]
                    if self.periodic[k] and np.any(self.shifts[k]):
                        pad = (b - a) / 8.0
                        a, b = a - pad, b + pad
                    axes.append(a + (np.arange(n) + 0.5) * (b - a) / n)
                U, V = np.meshgrid(axes[0], axes[1], indexing="ij")
                uv = np.stack([U.ravel(), V.ravel()], axis=-1)
                self._seed_uv = uv
                self._seed_tree = cKDTree(self.points(uv))
            return self._seed_tree, self._seed_uv


class FunctionChart(SurfaceChart):
    """Chart from an arbitrary map; partials by central differences."""

    name = "function"
    analytic = False

    def __init__(self, fn, domain, periodic=(False, False), shifts=None, h1=1e-6, h2=1e-4):
        super().__init__(domain, periodic, shifts)
        self.fn = fn
        self.h1 = h1
        self.h2 = h2

    def point(self, u, v):
        return np.asarray(self.fn(np.asarray(u, float), np.asarray(v, float)), dtype=float)

    def derivatives(self, u, v):
        f = self.point
        h, k = self.h1, self.h2
        x = f(u, v)
        xu = (f(u + h, v) - f(u - h, v)) / (2 * h)
        xv = (f(u, v + h) - f(u, v - h)) / (2 * h)
        xuu = (f(u + k, v) - 2 * x + f(u - k, v)) / k**2
        xvv = (f(u, v + k) - 2 * x + f(u, v - k)) / k**2
        xuv = (f(u + k, v + k) - f(u + k, v - k) - f(u - k, v + k) + f(u - k, v - k)) / (4 * k * k)
        return x, xu, xv, xuu, xuv, xvv


class Plane(SurfaceChart):
    """``(u, v) -> (u, v, 0)``; periodic axes are translation periodic."""

    name = "plane"

    def __init__(self, domain=((0.0, 1.0), (0.0, 1.0)), periodic=(False, False)):
        (u0, u1), (v0, v1) = domain
        shifts = [[u1 - u0, 0.0, 0.0], [0.0, v1 - v0, 0.0]]
        super().__init__(domain, periodic, shifts)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        z = np.zeros(u.shape)
        o = np.ones(u.shape)
        x = np.stack([u, v, z], -1)
        zero3 = np.stack([z, z, z], -1)
        return x, np.stack([o, z, z], -1), np.stack([z, o, z], -1), zero3, zero3, zero3

    def closest_point(self, P):
        return P[:, :2].copy(), np.column_stack([P[:, 0], P[:, 1], np.zeros(len(P))])

    def params(self):
        return {"surface": "plane", "domain": [list(d) for d in self.domain],
                "periodic": list(self.periodic)}


# cyclic coordinate permutations (rotations) moving the polar axis
_AXIS_PERM = {"z": (0, 1, 2), "x": (1, 2, 0), "y": (2, 0, 1)}


class Sphere(SurfaceChart):
    """Latitude/longitude sphere of radius ``r``; outward normal.

    ``axis`` selects which ambient axis passes through the chart's singular
    poles, so that paths through e.g. the north pole can use a regular chart.
    """

    name = "sphere"

    def __init__(self, r=1.0, axis="z"):
        super().__init__(((0.0, 2 * math.pi), (-math.pi / 2, math.pi / 2)), (True, False))
        self.r = float(r)
        self.axis = axis
        # output component i takes canonical component perm[i]
        self._perm = _AXIS_PERM[axis]

    def _place(self, a):
        return a[..., list(self._perm)]

    def _unplace(self, P):
        inv = np.argsort(self._perm)
        return P[..., list(inv)]

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        r = self.r
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        z = np.zeros(u.shape)
        x = r * np.stack([cu * cv, su * cv, sv], -1)
        xu = r * np.stack([-su * cv, cu * cv, z], -1)
        xv = r * np.stack([-cu * sv, -su * sv, cv], -1)
        xuu = r * np.stack([-cu * cv, -su * cv, z], -1)
        xuv = r * np.stack([su * sv, -cu * sv, z], -1)
        xvv = r * np.stack([-cu * cv, -su * cv, -sv], -1)
        return tuple(self._place(a) for a in (x, xu, xv, xuu, xuv, xvv))

    def closest_point(self, P):
        Q = self._unplace(P)
        norm = np.linalg.norm(Q, axis=-1)
        if np.any(norm == 0.0):
            raise OutsideTube("sphere centre has no nearest point")
        Q = Q / norm[:, None]
        u = np.mod(np.arctan2(Q[:, 1], Q[:, 0]), 2 * math.pi)
        v = np.arcsin(np.clip(Q[:, 2], -1.0, 1.0))
        return np.column_stack([u, v]), self.r * self._place(Q)

    def refinement(self, level):
        from .mesh import cube_sphere

        return cube_sphere(self, level)

    def params(self):
        return {"surface": "sphere", "r": self.r, "axis": self.axis}


class Torus(SurfaceChart):
    """``((R + r cos v) cos u, (R + r cos v) sin u, r sin v)``, outward normal."""

    name = "torus"

    def __init__(self, R=2.0, r=1.0):
        super().__init__(((0.0, 2 * math.pi), (0.0, 2 * math.pi)), (True, True))
        if not R > r > 0:
            raise ValueError("torus needs R > r > 0")
        self.R = float(R)
        self.r = float(r)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        R, r = self.R, self.r
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        rho = R + r * cv
        z = np.zeros(u.shape)
        x = np.stack([rho * cu, rho * su, r * sv], -1)
        xu = np.stack([-rho * su, rho * cu, z], -1)
        xv = np.stack([-r * sv * cu, -r * sv * su, r * cv], -1)
        xuu = np.stack([-rho * cu, -rho * su, z], -1)
        xuv = np.stack([r * sv * su, -r * sv * cu, z], -1)
        xvv = np.stack([-r * cv * cu, -r * cv * su, -r * sv], -1)
        return x, xu, xv, xuu, xuv, xvv

    def closest_point(self, P):
        rad = np.hypot(P[:, 0], P[:, 1])
        if np.any(rad == 0.0):
            raise OutsideTube("point on the torus axis")
        u = np.mod(np.arctan2(P[:, 1], P[:, 0]), 2 * math.pi)
        v = np.mod(np.arctan2(P[:, 2], rad - self.R), 2 * math.pi)
        if np.any(np.hypot(rad - self.R, P[:, 2]) == 0.0):
            raise OutsideTube("point on the core circle of the torus")
        uv = np.column_stack([u, v])
        return uv, self.points(uv)

    def params(self):
        return {"surface": "torus", "R": self.R, "r": self.r}


class Cylinder(SurfaceChart):
    """``(r cos u, r sin u, v)`` over ``v`` in ``height``; outward normal, boundary in ``v``."""

    name = "cylinder"

    def __init__(self, r=1.0, height=(0.0, 1.0)):
        super().__init__(((0.0, 2 * math.pi), tuple(height)), (True, False))
        self.r = float(r)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        r = self.r
        cu, su = np.cos(u), np.sin(u)
        z = np.zeros(u.shape)
        o = np.ones(u.shape)
        x = np.stack([r * cu, r * su, v], -1)
        xu = np.stack([-r * su, r * cu, z], -1)
        xv = np.stack([z, z, o], -1)
        xuu = np.stack([-r * cu, -r * su, z], -1)
        zero3 = np.stack([z, z, z], -1)
        return x, xu, xv, xuu, zero3, zero3

    def closest_point(self, P):
        rad = np.hypot(P[:, 0], P[:, 1])
        if np.any(rad == 0.0):
            raise OutsideTube("point on the cylinder axis")
        u = np.mod(np.arctan2(P[:, 1], P[:, 0]), 2 * math.pi)
        uv = np.column_stack([u, P[:, 2]])
        return uv, self.points(uv)

    def params(self):
        return {"surface": "cylinder", "r": self.r, "height": list(self.domain[1])}


_GL16 = np.polynomial.legendre.leggauss(16)


class Corrugation(SurfaceChart):
    """Developable corrugation built from the tangent-angle profile
    ``alpha(s) = a sin(2 pi s / S)``:

        x(s, y) = (int_0^s cos(alpha), y, int_0^s sin(alpha))

    The arclength integrals use 16-point Gauss-Legendre per period.  The
    first fundamental form is ``ds^2 + dy^2`` for every amplitude ``a``.
    """

    name = "corrugation"

    def __init__(self, a=0.3, S=2 * math.pi, w=1.0):
        from .errors import ProfileOverturn

        if abs(a) >= math.pi / 2:
            raise ProfileOverturn(f"|a| = {abs(a)} >= pi/2 overturns the profile")
        self.a = float(a)
        self.S = float(S)
        self.w = float(w)
        xs, zs = self._integral(np.array([self.S]))
        self._period_shift = np.array([xs[0], 0.0, zs[0]])
        super().__init__(((0.0, self.S), (0.0, self.w)), (True, True),
                         [self._period_shift, [0.0, self.w, 0.0]])

    def alpha(self, s):
        return self.a * np.sin(2 * math.pi * s / self.S)

    def alpha_prime(self, s):
        k = 2 * math.pi / self.S
        return self.a * k * np.cos(k * s)

    def _integral(self, r):
        # int_0^r (cos alpha, sin alpha) for 0 <= r <= S
        xi, wi = _GL16
        nodes = 0.5 * r[..., None] * (xi + 1.0)
        al = self.alpha(nodes)
        half = 0.5 * r
        return half * (np.cos(al) @ wi), half * (np.sin(al) @ wi)

    def derivatives(self, u, v):
        s, y = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        n = np.floor(s / self.S)
        rem = s - n * self.S
        X, Z = self._integral(rem)
        X = X + n * self._period_shift[0]
        Z = Z + n * self._period_shift[2]
        al = self.alpha(s)
        ap = self.alpha_prime(s)
        ca, sa = np.cos(al), np.sin(al)
        z = np.zeros(s.shape)
        o = np.ones(s.shape)
        x = np.stack([X, y, Z], -1)
        xs = np.stack([ca, z, sa], -1)
        xy = np.stack([z, o, z], -1)
        xss = np.stack([-sa * ap, z, ca * ap], -1)
        zero3 = np.stack([z, z, z], -1)
        return x, xs, xy, xss, zero3, zero3

    def params(self):
        return {"surface": "corrugation", "a": self.a, "S": self.S, "w": self.w}


class RigidChart(SurfaceChart):
    """``R x(u, v) + c`` for a rotation ``R`` and translation ``c``."""

    def __init__(self, base, rotation, translation=(0.0, 0.0, 0.0)):
        self.base = base
        self.rotation = np.asarray(rotation, dtype=float)
        self.translation = np.asarray(translation, dtype=float)
        self.name = base.name
        self.seed_resolution = base.seed_resolution
        super().__init__(base.domain, base.periodic, base.shifts @ self.rotation.T)

    def derivatives(self, u, v):
        out = self.base.derivatives(u, v)
        R = self.rotation
        return (out[0] @ R.T + self.translation,) + tuple(a @ R.T for a in out[1:])

    def closest_point(self, P):
        res = self.base.closest_point((P - self.translation) @ self.rotation)
        if res is None:
            return None
        uv, rho = res
        return uv, rho @ self.rotation.T + self.translation

    def refinement(self, level):
        mesh = self.base.refinement(level)
        if mesh is None:
            return None
        return mesh.with_vertices(mesh.vertices @ self.rotation.T + self.translation, chart=self)

    def params(self):
        return {**self.base.params(), "rotation": self.rotation.tolist(),
                "translation": self.translation.tolist()}


def chart_from_spec(spec):
    """Build a builtin chart from a JSON-style descriptor such as
    ``{"surface": "torus", "R": 2.0, "r": 1.0}``."""
    spec = dict(spec)
    kind = spec.pop("surface")
    if kind == "sphere":
        return Sphere(spec.get("r", 1.0), spec.get("axis", "z"))
    if kind == "torus":
        return Torus(spec.get("R", 2.0), spec.get("r", 1.0))
    if kind == "cylinder":
        return Cylinder(spec.get("r", 1.0), tuple(spec.get("height", (0.0, 1.0))))
    if kind == "plane":
        return Plane(tuple(tuple(d) for d in spec.get("domain", ((0, 1), (0, 1)))),
                     tuple(spec.get("periodic", (False, False))))
    if kind == "corrugation":
        return Corrugation(spec.get("a", 0.3), spec.get("S", 2 * math.pi), spec.get("w", 1.0))
    raise ValueError(f"unknown surface {kind!r}")


# ---------------------------------------------------------------------------
# fundamental forms and mean curvature


def fundamental_forms(chart, uv, eps=DEGENERATE_EPS):
    """First and second fundamental forms and the unit chart normal at ``uv``.

    Works on a single parameter pair or on arrays of shape ``(..., 2)``.
    Raises :class:`DegenerateChart` where ``EG - F^2 <= eps``.
    """
    u, v = _as_uv(uv)
    _, xu, xv, xuu, xuv, xvv = chart.derivatives(u, v)
    E, F, G = _dot(xu, xu), _dot(xu, xv), _dot(xv, xv)
    det = E * G - F * F
    if np.any(det <= eps):
        raise DegenerateChart(f"EG - F^2 <= {eps:g} (non-immersion point)")
    n = np.cross(xu, xv) / np.sqrt(det)[..., None]
    return FundamentalForms(E, F, G, _dot(xuu, n), _dot(xuv, n), _dot(xvv, n), n)


def mean_curvature(chart, uv):
    ff = fundamental_forms(chart, uv)
    return (ff.e * ff.G - 2 * ff.f * ff.F + ff.g2 * ff.E) / (2 * (ff.E * ff.G - ff.F**2))


def principal_curvatures(chart, uv):
    """Eigenvalues of the shape operator, ascending."""
    ff = fundamental_forms(chart, uv)
    det = ff.E * ff.G - ff.F**2
    H = (ff.e * ff.G - 2 * ff.f * ff.F + ff.g2 * ff.E) / (2 * det)
    K = (ff.e * ff.g2 - ff.f**2) / det
    disc = np.sqrt(np.maximum(H * H - K, 0.0))
    return H - disc, H + disc


def smooth_mean_curvature_integral(chart, quadrature_order=32):
    """Tensor-product Gauss-Legendre value of the integral of ``H dA`` over the chart domain."""
    xi, wi = np.polynomial.legendre.leggauss(int(quadrature_order))
    (u0, u1), (v0, v1) = chart.domain
    us = 0.5 * (u1 - u0) * (xi + 1) + u0
    vs = 0.5 * (v1 - v0) * (xi + 1) + v0
    U, Vg = np.meshgrid(us, vs, indexing="ij")
    ff = fundamental_forms(chart, np.stack([U, Vg], -1))
    det = ff.E * ff.G - ff.F**2
    H = (ff.e * ff.G - 2 * ff.f * ff.F + ff.g2 * ff.E) / (2 * det)
    integrand = H * np.sqrt(det)
    jac = 0.25 * (u1 - u0) * (v1 - v0)
    return float(jac * (wi @ integrand @ wi))


# ---------------------------------------------------------------------------
# geodesics


def christoffel(chart, u, v, fd_step=1e-6):
    """Christoffel symbols ``Gamma[k, i, j]`` at a single parameter point."""
    if chart.analytic:
        _, xu, xv, xuu, xuv, xvv = chart.derivatives(u, v)
        g = np.array([[xu @ xu, xu @ xv], [xu @ xv, xv @ xv]])
        second = {(0, 0): xuu, (0, 1): xuv, (1, 1): xvv}
        gam = np.empty((2, 2, 2))
        ginv = np.linalg.inv(g)
        for (i, j), xij in second.items():
            lowered = np.array([xij @ xu, xij @ xv])
            gam[:, i, j] = gam[:, j, i] = ginv @ lowered
        return gam

    def metric(a, b):
        _, xu, xv, *_ = chart.derivatives(a, b)
        return np.array([[xu @ xu, xu @ xv], [xu @ xv, xv @ xv]])

    h = fd_step
    dg = [(metric(u + h, v) - metric(u - h, v)) / (2 * h),
          (metric(u, v + h) - metric(u, v - h)) / (2 * h)]
    ginv = np.linalg.inv(metric(u, v))
    gam = np.empty((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                gam[k, i, j] = 0.5 * sum(
                    ginv[k, m] * (dg[i][m, j] + dg[j][m, i] - dg[m][i, j]) for m in range(2)
                )
    return gam


def _in_domain(chart, uv, tol=1e-12):
    for k in range(2):
        if chart.periodic[k]:
            continue
        a, b = chart.domain[k]
        if uv[k] < a - tol or uv[k] > b + tol:
            return False
    return True


def geodesic_shoot(chart, uv0, direction, length, step=1e-3):
    """Integrate the geodesic equation with classical RK4.

    ``direction`` is a parameter-space vector ``(du, dv)`` (rescaled to unit
    speed in the first fundamental form) or an ambient tangent 3-vector.
    The path is sampled at ``ceil(length / step)`` equal arclength steps.
    """
    uv0 = np.asarray(uv0, dtype=float)
    direction = np.asarray(direction, dtype=float)
    _, xu, xv, *_ = chart.derivatives(uv0[0], uv0[1])
    if direction.shape == (3,):
        J = np.column_stack([xu, xv])
        direction = np.linalg.lstsq(J, direction, rcond=None)[0]
    g = np.array([[xu @ xu, xu @ xv], [xu @ xv, xv @ xv]])
    if g[0, 0] * g[1, 1] - g[0, 1] ** 2 <= DEGENERATE_EPS:
        raise DegenerateChart("geodesic start at a non-immersion point")
    speed = math.sqrt(direction @ g @ direction)
    direction = direction / speed

    def rhs(y):
        gam = christoffel(chart, y[0], y[1])
        d = y[2:]
        acc = -np.einsum("kij,i,j->k", gam, d, d)
        return np.concatenate([d, acc])

    n = max(1, int(math.ceil(length / step - 1e-9)))
    h = length / n
    y = np.concatenate([uv0, direction])
    out = [y[:2].copy()]
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not _in_domain(chart, y[:2]):
            raise DomainExit(f"geodesic left the chart domain at uv={y[:2]}")
        out.append(y[:2].copy())
    uv = np.array(out)
    return GeodesicPath(np.linspace(0.0, length, n + 1), uv, chart.points(uv))


# ---------------------------------------------------------------------------
# signed distance / nearest point retraction


def _newton_project(chart, P, uv, tol=1e-13, max_iter=50):
    uv = np.array(uv, dtype=float)
    active = np.ones(len(P), dtype=bool)
    scale = 1.0 + np.abs(P).max(initial=0.0)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        x, xu, xv, xuu, xuv, xvv = chart.derivatives(uv[idx, 0], uv[idx, 1])
        d = x - P[idx]
        gu, gv = _dot(xu, d), _dot(xv, d)
        E, F, G = _dot(xu, xu), _dot(xu, xv), _dot(xv, xv)
        Huu = E + _dot(xuu, d)
        Huv = F + _dot(xuv, d)
        Hvv = G + _dot(xvv, d)
        det = Huu * Hvv - Huv * Huv
        bad = (det <= 0) | (Huu <= 0)
        if np.any(bad):
            # Levenberg-style shift away from indefinite Hessians
            mu = np.where(bad, np.abs(Huu) + np.abs(Hvv) + E + G, 0.0)
            Huu, Hvv = Huu + mu, Hvv + mu
            det = Huu * Hvv - Huv * Huv
        du = -(Hvv * gu - Huv * gv) / det
        dv = -(Huu * gv - Huv * gu) / det
        uv[idx, 0] += du
        uv[idx, 1] += dv
        steplen = np.sqrt(np.maximum(E * du * du + 2 * F * du * dv + G * dv * dv, 0.0))
        done = (steplen <= tol * scale) & ~bad
        active[idx[done]] = False
    if np.any(active):
        raise OutsideTube(f"Newton projection did not converge for {int(active.sum())} point(s)")
    x, xu, xv, xuu, xuv, xvv = chart.derivatives(uv[:, 0], uv[:, 1])
    d = x - P
    Huu = _dot(xu, xu) + _dot(xuu, d)
    Huv = _dot(xu, xv) + _dot(xuv, d)
    Hvv = _dot(xv, xv) + _dot(xvv, d)
    if np.any((Huu * Hvv - Huv * Huv <= 0) | (Huu <= 0)):
        raise OutsideTube("second-order optimality fails: point outside the tube")
    return uv, x


def retract(chart, P, seeds=None, method="auto"):
    """Nearest surface points for an ``(N, 3)`` array; returns ``(uv, rho)``.

    ``method="newton"`` always runs the projected Newton iteration, seeded by
    ``seeds`` (parameter guesses) or by the cached 256x256 sample grid.
    ``"auto"`` prefers a closed form when the chart has one.
    """
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    if method == "auto":
        res = chart.closest_point(P)
        if res is not None:
            return res
    elif method != "newton":
        raise ValueError(f"unknown retraction method {method!r}")
    if seeds is None:
        tree, seed_uv = chart.seed_tree()
        _, nearest = tree.query(P)
        seeds = seed_uv[nearest]
    uv, rho = _newton_project(chart, P, np.asarray(seeds, dtype=float).reshape(-1, 2))
    return chart.wrap(uv), rho


def signed_distance_retraction(chart, p, seeds=None, method="auto"):
    """Signed distance ``sigma``, nearest point ``rho`` and ``g = grad sigma``.

    ``g`` is returned as the chart normal at ``rho``, which equals
    ``(p - rho) / sigma`` at a true nearest point and stays well conditioned
    as ``sigma -> 0``.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    P = p.reshape(-1, 3)
    uv, rho = retract(chart, P, seeds, method)
    n = chart.normal(uv[:, 0], uv[:, 1])
    d = P - rho
    sigma = np.sign(_dot(d, n)) * np.linalg.norm(d, axis=-1)
    if single:
        return float(sigma[0]), rho[0], n[0]
    return sigma, rho, n


class NormalField:
    """``g = grad sigma`` of a chart, evaluated on batches of points."""

    def __init__(self, chart, method="auto"):
        self.chart = chart
        self.method = method

    def __call__(self, P, seeds=None):
        _, _, g = signed_distance_retraction(self.chart, np.asarray(P).reshape(-1, 3),
                                             seeds, self.method)
        return g
