"""NumPy implementations of the geometry kernels.

Used when the compiled ``_ckernels`` extension is unavailable or when
``GRASPLAB_PURE_PYTHON=1``. Every function mirrors the signature of its
Cython counterpart exactly; polygons are ``(m, 2)`` float64 arrays with
counter-clockwise vertex order.
"""

import math

import numpy as np


def _crossings(s, t, level):
    s2 = np.roll(s, -1)
    t2 = np.roll(t, -1)
    a = s - level
    b = s2 - level
    hit = a * b < 0.0
    if not hit.any():
        return t[:0]
    lam = a[hit] / (a[hit] - b[hit])
    return t[hit] + lam * (t2[hit] - t[hit])


def strip_interval(verts, cx, cy, dx, dy, lo, hi):
    """Range of ``(p - c) . d`` over the polygon clipped to ``lo <= (p - c) . n <= hi``.

    ``n`` is ``d`` rotated by +90 degrees. Returns ``(found, tmin, tmax)``.
    """
    px = verts[:, 0] - cx
    py = verts[:, 1] - cy
    t = px * dx + py * dy
    s = py * dx - px * dy
    inside = (s >= lo) & (s <= hi)
    parts = [t[inside], _crossings(s, t, lo), _crossings(s, t, hi)]
    vals = np.concatenate(parts)
    if vals.size == 0:
        return False, 0.0, 0.0
    return True, float(vals.min()), float(vals.max())


def sweep_extents(verts, cx, cy, half, n_dirs):
    """Extent of the polygon inside a centred band, for ``n_dirs`` directions over [0, pi).

    Direction ``k`` is ``k * pi / n_dirs``; the band keeps points within
    ``half`` of the line through ``c`` along that direction. Directions where
    the band misses the polygon get ``inf``.
    """
    ang = np.arange(n_dirs) * (math.pi / n_dirs)
    dx = np.cos(ang)[:, None]
    dy = np.sin(ang)[:, None]
    px = (verts[:, 0] - cx)[None, :]
    py = (verts[:, 1] - cy)[None, :]
    t = px * dx + py * dy
    s = py * dx - px * dy
    t2 = np.roll(t, -1, axis=1)
    s2 = np.roll(s, -1, axis=1)

    inside = (s >= -half) & (s <= half)
    big = np.inf
    tmax = np.where(inside, t, -big).max(axis=1)
    tmin = np.where(inside, t, big).min(axis=1)
    for level in (-half, half):
        a = s - level
        b = s2 - level
        hit = a * b < 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(hit, a / (a - b), 0.0)
        tc = t + lam * (t2 - t)
        tmax = np.maximum(tmax, np.where(hit, tc, -big).max(axis=1))
        tmin = np.minimum(tmin, np.where(hit, tc, big).min(axis=1))
    ext = tmax - tmin
    ext[~np.isfinite(ext)] = np.inf
    return ext


def poly_distance(verts, px, py):
    """Euclidean distance from a point to a convex polygon; 0 inside or on the boundary."""
    ax = verts[:, 0]
    ay = verts[:, 1]
    bx = np.roll(ax, -1)
    by = np.roll(ay, -1)
    ex = bx - ax
    ey = by - ay
    cross = ex * (py - ay) - ey * (px - ax)
    if (cross >= 0.0).all():
        return 0.0
    l2 = ex * ex + ey * ey
    u = np.clip(((px - ax) * ex + (py - ay) * ey) / l2, 0.0, 1.0)
    qx = ax + u * ex - px
    qy = ay + u * ey - py
    return float(np.sqrt((qx * qx + qy * qy).min()))


def points_in_poly(verts, xs, ys):
    """Boolean mask of points inside (or on) a convex CCW polygon."""
    mask = np.ones(xs.shape, dtype=bool)
    m = verts.shape[0]
    for i in range(m):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % m]
        mask &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= 0.0
    return mask


def _clip_halfplane(poly, ax, ay, bx, by):
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        sp = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        sq = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
        if sp >= 0.0:
            out.append((px, py))
        if (sp >= 0.0) != (sq >= 0.0):
            lam = sp / (sp - sq)
            out.append((px + lam * (qx - px), py + lam * (qy - py)))
    return out


def convex_intersection_area(p, q):
    """Area of the intersection of two convex CCW polygons (Sutherland-Hodgman)."""
    poly = [tuple(v) for v in p]
    m = q.shape[0]
    for i in range(m):
        if not poly:
            return 0.0
        ax, ay = q[i]
        bx, by = q[(i + 1) % m]
        poly = _clip_halfplane(poly, ax, ay, bx, by)
    if len(poly) < 3:
        return 0.0
    area = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        area += x1 * y2 - x2 * y1
    return abs(area) * 0.5
