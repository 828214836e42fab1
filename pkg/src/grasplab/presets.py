"""Object-set presets: 25 soft toys and two 8-object rigid difficulty levels.

Footprints are top-down outlines of each object resting in the bin; all
lengths are millimetres. Dimensions are declared analogs of the household
objects they are named after, not measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import convex_hull
from .scene import Circle, ConvexPolygon, Ellipse, Material, ObjectModel, Rect


def _capsule(length, width, n_cap=8):
    """Stadium outline along local x as a convex polygon."""
    r = width / 2.0
    a = length / 2.0 - r
    pts = []
    for k in range(n_cap + 1):
        t = -math.pi / 2 + math.pi * k / n_cap
        pts.append((a + r * math.cos(t), r * math.sin(t)))
    for k in range(n_cap + 1):
        t = math.pi / 2 + math.pi * k / n_cap
        pts.append((-a + r * math.cos(t), r * math.sin(t)))
    return ConvexPolygon(tuple(pts))


def _hull(points):
    return ConvexPolygon(tuple(map(tuple, convex_hull(np.asarray(points)))))


def _mug():
    a = np.linspace(0, 2 * math.pi, 48, endpoint=False)
    body = np.column_stack([38 * np.cos(a), 38 * np.sin(a)])
    handle = np.array([[56.0, -13.0], [58.0, 0.0], [56.0, 13.0]])
    return _hull(np.vstack([body, handle]))


def _hexagon(rx, ry):
    a = np.arange(6) * math.pi / 3 + math.pi / 6
    return ConvexPolygon(tuple(zip(rx * np.cos(a), ry * np.sin(a))))


# id, shape, height, mass, color
_TOYS = [
    ("toy_bear", Ellipse(30, 24), 70, 120, (0.55, 0.35, 0.2)),
    ("toy_bunny", Ellipse(32, 20), 60, 90, (0.95, 0.6, 0.75)),
    ("toy_duck", Circle(24), 50, 60, (1.0, 0.85, 0.1)),
    ("toy_frog", Ellipse(26, 21), 45, 70, (0.2, 0.75, 0.25)),
    ("toy_pig", Circle(29), 55, 110, (0.98, 0.55, 0.6)),
    ("toy_cat", Rect(52, 36), 50, 95, (0.45, 0.45, 0.5)),
    ("toy_dog", Ellipse(33, 22), 65, 130, (0.75, 0.55, 0.3)),
    ("toy_owl", _hexagon(26, 30), 70, 85, (0.5, 0.3, 0.6)),
    ("toy_fish", Ellipse(34, 15), 35, 55, (0.1, 0.5, 0.9)),
    ("toy_penguin", Ellipse(22, 28), 75, 100, (0.1, 0.1, 0.15)),
    ("toy_lion", Circle(31), 60, 140, (0.9, 0.6, 0.15)),
    ("toy_monkey", Rect(44, 40), 65, 115, (0.4, 0.25, 0.1)),
    ("toy_elephant", Ellipse(33, 26), 60, 150, (0.6, 0.65, 0.75)),
    ("toy_turtle", _hexagon(30, 24), 35, 80, (0.15, 0.55, 0.35)),
    ("toy_octopus", Circle(27), 45, 75, (0.85, 0.2, 0.55)),
    ("toy_star", _hexagon(28, 28), 30, 40, (0.95, 0.75, 0.0)),
    ("toy_heart", _hull([(-24, 8), (-14, 20), (0, 12), (14, 20), (24, 8), (0, -22)]), 30, 35, (0.9, 0.1, 0.2)),
    ("toy_ball", Circle(20), 40, 30, (0.2, 0.4, 0.95)),
    ("toy_carrot", _capsule(64, 22), 35, 45, (1.0, 0.45, 0.05)),
    ("toy_whale", Ellipse(34, 18), 40, 90, (0.25, 0.35, 0.7)),
    ("toy_chick", Circle(18), 40, 25, (1.0, 0.95, 0.35)),
    ("toy_mouse", Ellipse(25, 16), 35, 40, (0.65, 0.65, 0.65)),
    ("toy_fox", _hull([(-30, -18), (30, -18), (34, 0), (20, 20), (-20, 20), (-34, 0)]), 55, 95, (0.95, 0.4, 0.1)),
    ("toy_panda", Circle(32), 70, 160, (0.3, 0.3, 0.3)),
    ("toy_dino", Rect(60, 30), 45, 85, (0.4, 0.8, 0.5)),
]

_LEVEL1 = [
    ("ycb_baseball", Circle(37), 70, 148, (0.85, 0.8, 0.68)),
    ("ycb_tennis_ball", Circle(33), 66, 58, (0.8, 0.9, 0.2)),
    ("ycb_orange", Circle(36), 70, 140, (1.0, 0.55, 0.1)),
    ("ycb_apple", Circle(37.5), 68, 68, (0.8, 0.1, 0.1)),
    ("ycb_peach", Ellipse(30, 28), 56, 33, (0.95, 0.6, 0.45)),
    ("ycb_pear", Ellipse(39, 29), 58, 49, (0.7, 0.8, 0.2)),
    ("ycb_mug", _mug(), 70, 118, (0.2, 0.3, 0.8)),
    ("ycb_foam_brick", Rect(75, 50), 50, 28, (0.85, 0.2, 0.3)),
]

_LEVEL2 = [
    ("ycb_banana", _capsule(120, 20), 15, 66, (1.0, 0.85, 0.1)),
    (
        "ycb_mustard_bottle",
        ConvexPolygon(((-90, -29), (50, -29), (75, -17), (95, -7), (95, 7), (75, 17), (50, 29), (-90, 29))),
        30,
        603,
        (0.95, 0.8, 0.05),
    ),
    ("ycb_sugar_box", Rect(175, 89), 38, 514, (0.9, 0.75, 0.3)),
    ("ycb_mini_soccer_ball", Circle(70), 140, 123, (0.15, 0.15, 0.15)),
    ("ycb_plate", Circle(78), 20, 279, (0.4, 0.6, 0.9)),
    (
        "ycb_power_drill",
        ConvexPolygon(((-90, -35), (60, -35), (95, -10), (95, 30), (-60, 60), (-90, 40))),
        55,
        895,
        (0.2, 0.6, 0.6),
    ),
    (
        "ycb_spatula",
        ConvexPolygon(((-100, -8), (40, -17), (100, -17), (100, 17), (40, 17), (-100, 8))),
        25,
        52,
        (0.3, 0.3, 0.3),
    ),
    ("ycb_chips_can", Rect(250, 75), 75, 205, (0.8, 0.1, 0.2)),
]


def _build(rows, material):
    return tuple(ObjectModel(i, s, material, float(h), float(m), c) for i, s, h, m, c in rows)


@dataclass(frozen=True)
class ObjectSetPreset:
    name: str
    members: tuple


SOFT_TOYS_25 = ObjectSetPreset("SoftToys25", _build(_TOYS, Material.SOFT))
LEVEL1_8 = ObjectSetPreset("Level1-8", _build(_LEVEL1, Material.RIGID))
LEVEL2_8 = ObjectSetPreset("Level2-8", _build(_LEVEL2, Material.RIGID))
YCB_16 = ObjectSetPreset("YCB-16", LEVEL1_8.members + LEVEL2_8.members)

OBJECT_SETS = {p.name: p for p in (SOFT_TOYS_25, LEVEL1_8, LEVEL2_8, YCB_16)}


def object_set(name) -> ObjectSetPreset:
    try:
        return OBJECT_SETS[name]
    except KeyError:
        raise ConfigError(f"unknown object set {name!r}; choose from {sorted(OBJECT_SETS)}") from None


def find_object(obj_id) -> ObjectModel:
    for preset in (SOFT_TOYS_25, LEVEL1_8, LEVEL2_8):
        for m in preset.members:
            if m.id == obj_id:
                return m
    raise ConfigError(f"unknown object {obj_id!r}")
