# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2

cnp.import_array()


def facet_normals(const double[:, ::1] P, const long[:, ::1] facets):
    cdef Py_ssize_t nf = facets.shape[0], f
    cdef double ux, uy, uz, vx, vy, vz, nx, ny, nz, nn
    cdef long a, b, c
    out_arr = np.zeros((nf, 3))
    cdef double[:, ::1] out = out_arr
    for f in range(nf):
        a = facets[f, 0]; b = facets[f, 1]; c = facets[f, 2]
        ux = P[b, 0] - P[a, 0]; uy = P[b, 1] - P[a, 1]; uz = P[b, 2] - P[a, 2]
        vx = P[c, 0] - P[a, 0]; vy = P[c, 1] - P[a, 1]; vz = P[c, 2] - P[a, 2]
        nx = uy * vz - uz * vy
        ny = uz * vx - ux * vz
        nz = ux * vy - uy * vx
        nn = sqrt(nx * nx + ny * ny + nz * nz)
        if nn > 0.0:
            out[f, 0] = nx / nn; out[f, 1] = ny / nn; out[f, 2] = nz / nn
    return out_arr


def facet_tau(const double[:, ::1] P, const long[:, ::1] facets):
    cdef Py_ssize_t nf = facets.shape[0], f
    cdef int k
    cdef long ip, iq, ir
    cdef double ux, uy, uz, vx, vy, vz, uu, vv, s, wx, wy, wz, q, best
    tau_arr = np.empty(nf)
    cdef double[::1] tau = tau_arr
    for f in range(nf):
        best = 1e300
        for k in range(3):
            ip = facets[f, k]; iq = facets[f, (k + 1) % 3]; ir = facets[f, (k + 2) % 3]
            ux = P[iq, 0] - P[ip, 0]; uy = P[iq, 1] - P[ip, 1]; uz = P[iq, 2] - P[ip, 2]
            vx = P[ir, 0] - P[ip, 0]; vy = P[ir, 1] - P[ip, 1]; vz = P[ir, 2] - P[ip, 2]
            uu = sqrt(ux * ux + uy * uy + uz * uz)
            vv = sqrt(vx * vx + vy * vy + vz * vz)
            ux /= uu; uy /= uu; uz /= uu
            s = ux * vx + uy * vy + uz * vz
            wx = vx - s * ux; wy = vy - s * uy; wz = vz - s * uz
            q = sqrt(wx * wx + wy * wy + wz * wz) / vv
            if q < best:
                best = q
        tau[f] = best
    return tau_arr


cdef inline void _conormal(const double[:, ::1] P, long p, long q, long o, double* out) nogil:
    cdef double ex = P[q, 0] - P[p, 0], ey = P[q, 1] - P[p, 1], ez = P[q, 2] - P[p, 2]
    cdef double dx = P[p, 0] - P[o, 0], dy = P[p, 1] - P[o, 1], dz = P[p, 2] - P[o, 2]
    cdef double s = (dx * ex + dy * ey + dz * ez) / (ex * ex + ey * ey + ez * ez)
    cdef double wx = dx - s * ex, wy = dy - s * ey, wz = dz - s * ez
    cdef double wn = sqrt(wx * wx + wy * wy + wz * wz)
    out[0] = wx / wn; out[1] = wy / wn; out[2] = wz / wn


def edge_dihedrals(const double[:, ::1] P, const double[:, ::1] FN,
                   const long[::1] f1, const long[::1] f2,
                   const long[::1] p1, const long[::1] q1, const long[::1] r,
                   const long[::1] p2, const long[::1] q2, const long[::1] s):
    cdef Py_ssize_t ne = f1.shape[0], i
    theta_a = np.empty(ne); npq_a = np.empty((ne, 3)); V_a = np.empty((ne, 3))
    W_a = np.empty((ne, 3)); len_a = np.empty(ne); fold_a = np.zeros(ne, dtype=bool)
    cdef double[::1] theta = theta_a, length = len_a
    cdef double[:, ::1] npq = npq_a, Vv = V_a, Wv = W_a
    cdef cnp.npy_bool[::1] folded = fold_a
    cdef double v[3]
    cdef double w[3]
    cdef double mx, my, mz, mn, cx, cy, cz, dot, mag, sd, ex, ey, ez
    cdef double n1x, n1y, n1z, n2x, n2y, n2z
    for i in range(ne):
        _conormal(P, p1[i], q1[i], r[i], v)
        _conormal(P, p2[i], q2[i], s[i], w)
        n1x = FN[f1[i], 0]; n1y = FN[f1[i], 1]; n1z = FN[f1[i], 2]
        n2x = FN[f2[i], 0]; n2y = FN[f2[i], 1]; n2z = FN[f2[i], 2]
        mx = n1x + n2x; my = n1y + n2y; mz = n1z + n2z
        mn = sqrt(mx * mx + my * my + mz * mz)
        if mn < 1e-8:
            folded[i] = True
            mn = 1.0
        npq[i, 0] = mx / mn; npq[i, 1] = my / mn; npq[i, 2] = mz / mn
        cx = n1y * n2z - n1z * n2y
        cy = n1z * n2x - n1x * n2z
        cz = n1x * n2y - n1y * n2x
        dot = n1x * n2x + n1y * n2y + n1z * n2z
        mag = atan2(sqrt(cx * cx + cy * cy + cz * cz), dot)
        sd = (v[0] + w[0]) * npq[i, 0] + (v[1] + w[1]) * npq[i, 1] + (v[2] + w[2]) * npq[i, 2]
        if sd > 0.0:
            theta[i] = mag
        elif sd < 0.0:
            theta[i] = -mag
        else:
            theta[i] = 0.0
        Vv[i, 0] = v[0]; Vv[i, 1] = v[1]; Vv[i, 2] = v[2]
        Wv[i, 0] = w[0]; Wv[i, 1] = w[1]; Wv[i, 2] = w[2]
        ex = P[q1[i], 0] - P[p1[i], 0]; ey = P[q1[i], 1] - P[p1[i], 1]; ez = P[q1[i], 2] - P[p1[i], 2]
        length[i] = sqrt(ex * ex + ey * ey + ez * ez)
    return theta_a, npq_a, V_a, W_a, len_a, fold_a


def compensated_sum(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double total = 0.0, comp = 0.0, y, t
    for i in range(n):
        y = x[i] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
