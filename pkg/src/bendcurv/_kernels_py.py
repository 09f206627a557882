"""Pure numpy implementations of the hot per-facet / per-edge loops.

These are the reference versions; ``_core.pyx`` mirrors them loop for loop.
"""
import numpy as np


def facet_normals(P, facets):
    """Unit normals ``(b - a) x (c - a)`` following the facet winding."""
    a = P[facets[:, 0]]
    n = np.cross(P[facets[:, 1]] - a, P[facets[:, 2]] - a)
    norm = np.sqrt(np.einsum("ij,ij->i", n, n))
    out = np.zeros_like(n)
    ok = norm > 0.0
    out[ok] = n[ok] / norm[ok, None]
    return out


def facet_tau(P, facets):
    """Smallest sine of the three corner angles of every facet."""
    tau = np.full(len(facets), np.inf)
    for k in range(3):
        p = P[facets[:, k]]
        u = P[facets[:, (k + 1) % 3]] - p
        v = P[facets[:, (k + 2) % 3]] - p
        uu = np.sqrt(np.einsum("ij,ij->i", u, u))
        vv = np.sqrt(np.einsum("ij,ij->i", v, v))
        uh = u / uu[:, None]
        perp = v - np.einsum("ij,ij->i", uh, v)[:, None] * uh
        q = np.sqrt(np.einsum("ij,ij->i", perp, perp)) / vv
        tau = np.minimum(tau, q)
    return tau


def _unit_conormal(p, q, opp):
    e = q - p
    d = p - opp
    s = np.einsum("ij,ij->i", d, e) / np.einsum("ij,ij->i", e, e)
    w = d - s[:, None] * e
    return w / np.sqrt(np.einsum("ij,ij->i", w, w))[:, None]


def edge_dihedrals(P, FN, f1, f2, p1, q1, r, p2, q2, s):
    """Signed dihedral data for interior edges.

    Returns ``theta, npq, V, W, length, folded`` where ``folded`` marks edges
    whose two facet normals nearly cancel (``|n1 + n2| < 1e-8``).
    """
    n1 = FN[f1]
    n2 = FN[f2]
    V = _unit_conormal(P[p1], P[q1], P[r])
    W = _unit_conormal(P[p2], P[q2], P[s])
    m = n1 + n2
    mnorm = np.sqrt(np.einsum("ij,ij->i", m, m))
    folded = mnorm < 1e-8
    npq = m / np.where(folded, 1.0, mnorm)[:, None]
    c = np.cross(n1, n2)
    mag = np.arctan2(np.sqrt(np.einsum("ij,ij->i", c, c)), np.einsum("ij,ij->i", n1, n2))
    sgn = np.sign(np.einsum("ij,ij->i", V + W, npq))
    theta = sgn * mag
    e = P[q1] - P[p1]
    length = np.sqrt(np.einsum("ij,ij->i", e, e))
    return theta, npq, V, W, length, folded


def compensated_sum(x):
    """Kahan summation in array order."""
    total = 0.0
    comp = 0.0
    for xi in np.asarray(x, dtype=float).tolist():
        y = xi - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
