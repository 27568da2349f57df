# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: fixed-step RK4 on built-in vector fields,
brute-force Hausdorff distance and greedy first-fit clustering."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, isfinite, NAN, INFINITY

cnp.import_array()

DEF MAXDIM = 3


cdef inline void _field(int code, double* y, double* out) noexcept nogil:
    cdef double r2, big
    if code == 0:
        # planar spiral, Cartesian form
        r2 = y[0] * y[0] + y[1] * y[1]
        out[0] = y[1] + y[0] * (1.0 - r2)
        out[1] = -y[0] + y[1] * (1.0 - r2)
    elif code == 1:
        # R^3 system with the z-axis as escaping set
        big = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + 1.0
        out[0] = 2.0 * y[0] * y[2] / big - y[1]
        out[1] = 2.0 * y[1] * y[2] / big + y[0]
        out[2] = (y[2] * y[2] - y[0] * y[0] - y[1] * y[1] + 1.0) / big
    else:
        # radial part of the spiral
        out[0] = y[0] * (1.0 - y[0] * y[0])


cdef inline void _rk4_step(int code, int d, double h, double* y) noexcept nogil:
    cdef double k1[MAXDIM]
    cdef double k2[MAXDIM]
    cdef double k3[MAXDIM]
    cdef double k4[MAXDIM]
    cdef double tmp[MAXDIM]
    cdef int j
    _field(code, y, k1)
    for j in range(d):
        tmp[j] = y[j] + 0.5 * h * k1[j]
    _field(code, tmp, k2)
    for j in range(d):
        tmp[j] = y[j] + 0.5 * h * k2[j]
    _field(code, tmp, k3)
    for j in range(d):
        tmp[j] = y[j] + h * k3[j]
    _field(code, tmp, k4)
    for j in range(d):
        y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])


def rk4_samples(int code, const double[:, ::1] y0, double h, Py_ssize_t n_samples,
                Py_ssize_t steps_per_sample, double r_div):
    cdef Py_ssize_t n = y0.shape[0]
    cdef int d = <int>y0.shape[1]
    if d > MAXDIM:
        raise ValueError("built-in fields have dimension <= 3")
    out_arr = np.full((n, n_samples + 1, d), np.nan)
    div_arr = np.full(n, -1, dtype=np.int64)
    cdef double[:, :, ::1] out = out_arr
    cdef long long[::1] div = div_arr
    cdef double y[MAXDIM]
    cdef double r2, lim2 = r_div * r_div
    cdef Py_ssize_t p, s, k
    cdef int j
    cdef bint dead
    with nogil:
        for p in range(n):
            for j in range(d):
                y[j] = y0[p, j]
                out[p, 0, j] = y[j]
            dead = False
            for s in range(1, n_samples + 1):
                for k in range(steps_per_sample):
                    _rk4_step(code, d, h, y)
                    r2 = 0.0
                    for j in range(d):
                        r2 += y[j] * y[j]
                    if not isfinite(r2) or r2 > lim2:
                        div[p] = (s - 1) * steps_per_sample + k + 1
                        dead = True
                        break
                if dead:
                    break
                for j in range(d):
                    out[p, s, j] = y[j]
    return out_arr, div_arr


cdef inline double _pair_dist(const double[:, ::1] a, Py_ssize_t i, const double[:, ::1] b,
                              Py_ssize_t k, int d) noexcept nogil:
    # scaled so tiny or huge differences neither underflow to 0 nor overflow
    cdef double m = 0.0, acc = 0.0, q
    cdef int j
    for j in range(d):
        q = fabs(a[i, j] - b[k, j])
        if q > m:
            m = q
    if m == 0.0 or m == INFINITY:
        return m
    for j in range(d):
        q = (a[i, j] - b[k, j]) / m
        acc += q * q
    return m * sqrt(acc)


def hausdorff(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], i, k
    cdef int d = <int>a.shape[1]
    cdef double best, dist, worst = 0.0
    with nogil:
        for i in range(na):
            best = INFINITY
            for k in range(nb):
                dist = _pair_dist(a, i, b, k, d)
                if dist < best:
                    best = dist
            if best > worst:
                worst = best
        for k in range(nb):
            best = INFINITY
            for i in range(na):
                dist = _pair_dist(a, i, b, k, d)
                if dist < best:
                    best = dist
            if best > worst:
                worst = best
    return worst


def greedy_cluster(const double[:, ::1] pts, double eps):
    cdef Py_ssize_t n = pts.shape[0], i, c, ncent = 0
    cdef int d = <int>pts.shape[1], j
    cdef double acc, diff, eps2 = eps * eps
    labels_arr = np.empty(n, dtype=np.int64)
    centers_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    cdef long long[::1] centers = centers_arr
    cdef bint found
    with nogil:
        for i in range(n):
            found = False
            for c in range(ncent):
                acc = 0.0
                for j in range(d):
                    diff = pts[i, j] - pts[centers[c], j]
                    acc += diff * diff
                if acc <= eps2:
                    labels[i] = c
                    found = True
                    break
            if not found:
                centers[ncent] = i
                labels[i] = ncent
                ncent += 1
    return centers_arr[:ncent].copy(), labels_arr
