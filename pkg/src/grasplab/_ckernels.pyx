# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels. Semantics match grasplab._pykernels exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs, INFINITY, M_PI

cnp.import_array()


cdef inline void _interval(const double[:, ::1] v, double cx, double cy,
                           double dx, double dy, double lo, double hi,
                           double* tmin, double* tmax) noexcept nogil:
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t i, j
    cdef double px, py, s, t, s2, t2, a, b, lam, tc
    cdef double mn = INFINITY
    cdef double mx = -INFINITY
    for i in range(m):
        j = i + 1
        if j == m:
            j = 0
        px = v[i, 0] - cx
        py = v[i, 1] - cy
        t = px * dx + py * dy
        s = py * dx - px * dy
        px = v[j, 0] - cx
        py = v[j, 1] - cy
        t2 = px * dx + py * dy
        s2 = py * dx - px * dy
        if s >= lo and s <= hi:
            if t < mn:
                mn = t
            if t > mx:
                mx = t
        a = s - lo
        b = s2 - lo
        if a * b < 0.0:
            lam = a / (a - b)
            tc = t + lam * (t2 - t)
            if tc < mn:
                mn = tc
            if tc > mx:
                mx = tc
        a = s - hi
        b = s2 - hi
        if a * b < 0.0:
            lam = a / (a - b)
            tc = t + lam * (t2 - t)
            if tc < mn:
                mn = tc
            if tc > mx:
                mx = tc
    tmin[0] = mn
    tmax[0] = mx


def strip_interval(const double[:, ::1] verts, double cx, double cy,
                   double dx, double dy, double lo, double hi):
    cdef double mn, mx
    _interval(verts, cx, cy, dx, dy, lo, hi, &mn, &mx)
    if mn > mx:
        return False, 0.0, 0.0
    return True, mn, mx


def sweep_extents(const double[:, ::1] verts, double cx, double cy,
                  double half, int n_dirs):
    out = np.empty(n_dirs, dtype=np.float64)
    cdef double[::1] o = out
    cdef int k
    cdef double ang, mn, mx
    with nogil:
        for k in range(n_dirs):
            ang = k * (M_PI / n_dirs)
            _interval(verts, cx, cy, cos(ang), sin(ang), -half, half, &mn, &mx)
            if mn > mx:
                o[k] = INFINITY
            else:
                o[k] = mx - mn
    return out


def poly_distance(const double[:, ::1] verts, double px, double py):
    cdef Py_ssize_t m = verts.shape[0]
    cdef Py_ssize_t i, j
    cdef double ax, ay, ex, ey, u, qx, qy, d2
    cdef double best = INFINITY
    cdef bint inside = True
    for i in range(m):
        j = i + 1
        if j == m:
            j = 0
        ax = verts[i, 0]
        ay = verts[i, 1]
        ex = verts[j, 0] - ax
        ey = verts[j, 1] - ay
        if ex * (py - ay) - ey * (px - ax) < 0.0:
            inside = False
        u = ((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey)
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
        qx = ax + u * ex - px
        qy = ay + u * ey - py
        d2 = qx * qx + qy * qy
        if d2 < best:
            best = d2
    if inside:
        return 0.0
    return sqrt(best)


def points_in_poly(const double[:, ::1] verts, xs, ys):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    shape = xs.shape
    cdef const double[::1] x = xs.reshape(-1)
    cdef const double[::1] y = ys.reshape(-1)
    out = np.ones(x.shape[0], dtype=np.uint8)
    cdef unsigned char[::1] o = out
    cdef Py_ssize_t m = verts.shape[0]
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t p, i, j
    cdef double ax, ay, bx, by
    with nogil:
        for p in range(n):
            for i in range(m):
                j = i + 1
                if j == m:
                    j = 0
                ax = verts[i, 0]
                ay = verts[i, 1]
                bx = verts[j, 0]
                by = verts[j, 1]
                if (bx - ax) * (y[p] - ay) - (by - ay) * (x[p] - ax) < 0.0:
                    o[p] = 0
                    break
    return out.view(bool).reshape(shape)


def convex_intersection_area(const double[:, ::1] p, const double[:, ::1] q):
    cdef Py_ssize_t cap = p.shape[0] + q.shape[0] + 4
    buf_a = np.empty((cap, 2), dtype=np.float64)
    buf_b = np.empty((cap, 2), dtype=np.float64)
    cdef double[:, ::1] a = buf_a
    cdef double[:, ::1] b = buf_b
    cdef double[:, ::1] tmp
    cdef Py_ssize_t na = p.shape[0]
    cdef Py_ssize_t nb, i, k, kk
    cdef Py_ssize_t m = q.shape[0]
    cdef double ax, ay, bx, by, px_, py_, qx_, qy_, sp, sq, lam, area
    for i in range(na):
        a[i, 0] = p[i, 0]
        a[i, 1] = p[i, 1]
    for i in range(m):
        if na == 0:
            return 0.0
        ax = q[i, 0]
        ay = q[i, 1]
        bx = q[(i + 1) % m, 0]
        by = q[(i + 1) % m, 1]
        nb = 0
        for k in range(na):
            kk = k + 1
            if kk == na:
                kk = 0
            px_ = a[k, 0]
            py_ = a[k, 1]
            qx_ = a[kk, 0]
            qy_ = a[kk, 1]
            sp = (bx - ax) * (py_ - ay) - (by - ay) * (px_ - ax)
            sq = (bx - ax) * (qy_ - ay) - (by - ay) * (qx_ - ax)
            if sp >= 0.0:
                b[nb, 0] = px_
                b[nb, 1] = py_
                nb += 1
            if (sp >= 0.0) != (sq >= 0.0):
                lam = sp / (sp - sq)
                b[nb, 0] = px_ + lam * (qx_ - px_)
                b[nb, 1] = py_ + lam * (qy_ - py_)
                nb += 1
        tmp = a
        a = b
        b = tmp
        na = nb
    if na < 3:
        return 0.0
    area = 0.0
    for k in range(na):
        kk = k + 1
        if kk == na:
            kk = 0
        area += a[k, 0] * a[kk, 1] - a[kk, 0] * a[k, 1]
    return fabs(area) * 0.5
