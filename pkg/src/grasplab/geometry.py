"""Planar geometry: footprints, convex hulls and minimum-area rectangles.

A :class:`Footprint` is an object's outline placed in the world. Circles keep
an exact analytic form; every other shape is a counter-clockwise convex
polygon. All band/strip queries go through :mod:`grasplab.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

CURVE_VERTICES = 96


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def polygon_area(verts):
    x = verts[:, 0]
    y = verts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def regular_polygon(rx, ry, n=CURVE_VERTICES):
    """Vertices of an axis-aligned ellipse (or circle) sampled at ``n`` angles, CCW."""
    a = np.arange(n) * (2.0 * math.pi / n)
    return np.column_stack([rx * np.cos(a), ry * np.sin(a)])


def convex_hull(points):
    """Andrew's monotone chain. Returns CCW hull vertices without collinear points."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(tuple(p))
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(tuple(p))
    return np.array(lower[:-1] + upper[:-1])


@dataclass(frozen=True)
class MinAreaRect:
    center: tuple
    width: float  # extent along ``axis``
    height: float  # extent along the perpendicular of ``axis``
    axis: float  # radians, direction of the side measured by ``width``
    corners: np.ndarray

    @property
    def short_axis(self):
        """Direction (radians, [0, pi)) along which the rectangle is narrowest."""
        a = self.axis if self.width <= self.height else self.axis + math.pi / 2
        return a % math.pi


def min_area_rect(points):
    """Minimum-area enclosing rectangle by rotating calipers over the convex hull."""
    hull = convex_hull(points)
    if len(hull) < 3:
        raise ValueError("need at least three non-collinear points")
    n = len(hull)
    edges = np.roll(hull, -1, axis=0) - hull
    best = None
    # caliper indices: extreme vertices along edge direction (max), normal (max), -edge (max)
    j = k = m = 0
    for i in range(n):
        e = edges[i] / math.hypot(*edges[i])
        nrm = np.array([-e[1], e[0]])
        if i == 0:
            proj_e = hull @ e
            proj_n = hull @ nrm
            j = int(np.argmax(proj_e))
            k = int(np.argmax(proj_n))
            m = int(np.argmin(proj_e))
        else:
            while np.dot(hull[(j + 1) % n], e) > np.dot(hull[j], e) + 1e-12:
                j = (j + 1) % n
            while np.dot(hull[(k + 1) % n], nrm) > np.dot(hull[k], nrm) + 1e-12:
                k = (k + 1) % n
            while np.dot(hull[(m + 1) % n], e) < np.dot(hull[m], e) - 1e-12:
                m = (m + 1) % n
        base = np.dot(hull[i], nrm)
        lo_e = np.dot(hull[m], e)
        hi_e = np.dot(hull[j], e)
        w = hi_e - lo_e
        h = np.dot(hull[k], nrm) - base
        area = w * h
        if best is None or area < best[0] - 1e-9 * max(1.0, abs(best[0])):
            best = (area, i, e, nrm, lo_e, hi_e, base, base + h)
    _, _, e, nrm, lo_e, hi_e, lo_n, hi_n = best
    corners = np.array(
        [
            e * lo_e + nrm * lo_n,
            e * hi_e + nrm * lo_n,
            e * hi_e + nrm * hi_n,
            e * lo_e + nrm * hi_n,
        ]
    )
    center = corners.mean(axis=0)
    return MinAreaRect(
        center=(float(center[0]), float(center[1])),
        width=float(hi_e - lo_e),
        height=float(hi_n - lo_n),
        axis=math.atan2(e[1], e[0]) % math.pi,
        corners=corners,
    )


class Footprint:
    """World-frame outline of one placed object."""

    __slots__ = ("kind", "cx", "cy", "radius", "verts", "bound")

    def __init__(self, kind, cx, cy, radius=0.0, verts=None):
        self.kind = kind
        self.cx = cx
        self.cy = cy
        self.radius = radius
        self.verts = verts
        if kind == "circle":
            self.bound = radius
        else:
            self.bound = float(np.sqrt(((verts - (cx, cy)) ** 2).sum(axis=1)).max())

    @property
    def is_circle(self):
        return self.kind == "circle"

    def interval(self, c, d, lo, hi):
        """``(tmin, tmax)`` of ``(p - c) . d`` over the footprint within ``lo <= (p - c) . n <= hi``.

        ``n`` is ``d`` rotated by +90 degrees. Returns ``None`` when the band misses.
        """
        dx, dy = d
        if self.kind == "circle":
            ox = self.cx - c[0]
            oy = self.cy - c[1]
            on = oy * dx - ox * dy
            od = ox * dx + oy * dy
            a = max(lo, on - self.radius)
            b = min(hi, on + self.radius)
            if a > b:
                return None
            off = 0.0 if a <= on <= b else min(abs(a - on), abs(b - on))
            h = math.sqrt(max(self.radius * self.radius - off * off, 0.0))
            return od - h, od + h
        found, t0, t1 = kernels.strip_interval(self.verts, c[0], c[1], dx, dy, lo, hi)
        return (t0, t1) if found else None

    def distance(self, p):
        if self.kind == "circle":
            return max(math.hypot(p[0] - self.cx, p[1] - self.cy) - self.radius, 0.0)
        return kernels.poly_distance(self.verts, p[0], p[1])

    def contains(self, xs, ys):
        if self.kind == "circle":
            return (xs - self.cx) ** 2 + (ys - self.cy) ** 2 <= self.radius * self.radius
        return kernels.points_in_poly(self.verts, xs, ys)

    def polygon(self):
        if self.kind == "circle":
            return regular_polygon(self.radius, self.radius) + (self.cx, self.cy)
        return self.verts

    def area(self):
        if self.kind == "circle":
            return math.pi * self.radius * self.radius
        return polygon_area(self.verts)

    def bbox(self):
        if self.kind == "circle":
            r = self.radius
            return self.cx - r, self.cy - r, self.cx + r, self.cy + r
        lo = self.verts.min(axis=0)
        hi = self.verts.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def intersection_area(a: Footprint, b: Footprint):
    """Overlap area of two footprints (circles handled through their polygonal outline)."""
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    if dx * dx + dy * dy >= (a.bound + b.bound) ** 2:
        return 0.0
    return kernels.convex_intersection_area(
        np.ascontiguousarray(a.polygon()), np.ascontiguousarray(b.polygon())
    )
