"""Planar workspace, object models and random placement."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PlacementExhausted, UnknownObject
from .geometry import CURVE_VERTICES, Footprint, intersection_area, polygon_area, regular_polygon, rotation

TWO_PI = 2.0 * math.pi
PLACEMENT_BUDGET = 10_000


class Material(enum.Enum):
    RIGID = "rigid"
    SOFT = "soft"


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ConfigError(f"non-finite pose {self!r}")
        t = self.theta % TWO_PI
        if t >= TWO_PI:  # -tiny % 2pi rounds up to 2pi
            t = 0.0
        object.__setattr__(self, "theta", float(t))


@dataclass(frozen=True)
class Circle:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("circle radius must be > 0")

    def local_polygon(self):
        return regular_polygon(self.radius, self.radius)


@dataclass(frozen=True)
class Rect:
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ConfigError("rect sides must be > 0")

    def local_polygon(self):
        a, b = self.w / 2.0, self.h / 2.0
        return np.array([[-a, -b], [a, -b], [a, b], [-a, b]], dtype=np.float64)


@dataclass(frozen=True)
class Ellipse:
    """Semi-axes ``a`` (local x) and ``b`` (local y)."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError("ellipse semi-axes must be > 0")

    def local_polygon(self):
        return regular_polygon(self.a, self.b, CURVE_VERTICES)


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple  # ((x, y), ...) counter-clockwise, local frame

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise ConfigError("polygon needs >= 3 (x, y) vertices")
        if polygon_area(v) <= 0:
            raise ConfigError("polygon must be counter-clockwise with positive area")
        e = np.roll(v, -1, axis=0) - v
        f = np.roll(e, -1, axis=0)
        if (e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0] < -1e-9).any():
            raise ConfigError("polygon is not convex")
        object.__setattr__(self, "vertices", tuple((float(x), float(y)) for x, y in v))

    def local_polygon(self):
        return np.asarray(self.vertices, dtype=np.float64)


ShapeSpec = Circle | Rect | Ellipse | ConvexPolygon


@dataclass(frozen=True)
class ObjectModel:
    id: str
    shape: ShapeSpec
    material: Material
    height: float
    mass: float
    color: tuple

    def __post_init__(self):
        if not self.height > 0:
            raise ConfigError(f"{self.id}: height must be > 0")
        if not self.mass > 0:
            raise ConfigError(f"{self.id}: mass must be > 0")
        c = tuple(float(v) for v in self.color)
        if len(c) != 3 or any(v < 0 or v > 1 for v in c):
            raise ConfigError(f"{self.id}: color must be an RGB triple in [0, 1]")
        if c == (1.0, 1.0, 1.0):
            raise ConfigError(f"{self.id}: color equals the white background")
        object.__setattr__(self, "color", c)


@dataclass(frozen=True)
class Workspace:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError("workspace must have positive extent")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    def contains_point(self, x, y):
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class Placed:
    obj: ObjectModel
    pose: Pose2D


def footprint(obj: ObjectModel, pose: Pose2D) -> Footprint:
    if isinstance(obj.shape, Circle):
        return Footprint("circle", pose.x, pose.y, radius=obj.shape.radius)
    v = obj.shape.local_polygon() @ rotation(pose.theta).T + (pose.x, pose.y)
    return Footprint("poly", pose.x, pose.y, verts=np.ascontiguousarray(v))


@dataclass(frozen=True)
class Scene:
    workspace: Workspace
    objects: tuple = ()
    _fps: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        objs = tuple(p if isinstance(p, Placed) else Placed(*p) for p in self.objects)
        object.__setattr__(self, "objects", objs)
        ids = [p.obj.id for p in objs]
        if len(set(ids)) != len(ids):
            raise ConfigError("object ids must be unique within a scene")
        fps = tuple(footprint(p.obj, p.pose) for p in objs)
        ws = self.workspace
        eps = 1e-9
        for p, fp in zip(objs, fps):
            x0, y0, x1, y1 = fp.bbox()
            if x0 < ws.x0 - eps or y0 < ws.y0 - eps or x1 > ws.x1 + eps or y1 > ws.y1 + eps:
                raise ConfigError(f"object {p.obj.id} leaves the workspace")
        object.__setattr__(self, "_fps", fps)

    @property
    def footprints(self):
        return self._fps

    @property
    def ids(self):
        return [p.obj.id for p in self.objects]

    def __len__(self):
        return len(self.objects)

    def index(self, obj_id):
        for i, p in enumerate(self.objects):
            if p.obj.id == obj_id:
                return i
        raise UnknownObject(obj_id)

    def to_dict(self):
        return scene_to_dict(self)

    def digest(self):
        """SHA-256 of the canonical JSON form; stable across runs."""
        blob = json.dumps(scene_to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def remove_object(scene: Scene, obj_id: str) -> Scene:
    i = scene.index(obj_id)
    return Scene(scene.workspace, scene.objects[:i] + scene.objects[i + 1 :])


def extent_along(obj: ObjectModel, pose: Pose2D, direction, center, width) -> float:
    """Width of the footprint along ``direction`` inside a band of ``width`` centred at ``center``.

    The band runs parallel to ``direction``. Returns 0 when it misses the object.
    """
    if not width > 0:
        raise ConfigError("band width must be > 0")
    d = np.asarray(direction, dtype=np.float64)
    d = d / math.hypot(d[0], d[1])
    iv = footprint(obj, pose).interval(center, (d[0], d[1]), -width / 2.0, width / 2.0)
    return 0.0 if iv is None else iv[1] - iv[0]


def place_randomly(members, workspace: Workspace, count: int, seed: int, overlap_frac=0.0,
                   budget=PLACEMENT_BUDGET, largest_first=False) -> Scene:
    """Place ``count`` distinct members uniformly at random with bounded pairwise overlap.

    Pairwise footprint intersection is kept at or below ``overlap_frac`` times
    the smaller footprint area. ``largest_first`` places the chosen members in
    decreasing footprint area, which packs dense clutters far more reliably.
    An object that fails ``budget // 10`` draws in a row discards the partial
    layout and starts over, so early objects cannot wall off later ones.
    Pure function of its arguments.
    """
    members = list(members)
    if count > len(members):
        raise ConfigError(f"count {count} exceeds {len(members)} members")
    rng = np.random.default_rng(seed)
    chosen = [members[i] for i in rng.permutation(len(members))[:count]]
    if largest_first:
        chosen.sort(key=lambda o: -footprint(o, Pose2D(0.0, 0.0)).area())
    per_object = max(1, budget // 10)
    placed, fps = [], []
    tries = 0
    k = 0
    while k < len(chosen):
        obj = chosen[k]
        local = obj.shape.local_polygon()
        area = footprint(obj, Pose2D(0.0, 0.0)).area()
        streak = 0
        while True:
            tries += 1
            streak += 1
            if tries > budget:
                raise PlacementExhausted(f"placed {len(placed)}/{count} objects in {budget} tries")
            if streak > per_object:
                placed, fps = [], []
                break
            theta = float(rng.uniform(0.0, TWO_PI))
            if isinstance(obj.shape, Circle):
                hx = hy = obj.shape.radius
            else:
                v = local @ rotation(theta).T
                hx = float(np.abs(v[:, 0]).max())
                hy = float(np.abs(v[:, 1]).max())
            if 2 * hx > workspace.width or 2 * hy > workspace.height:
                continue
            x = float(rng.uniform(workspace.x0 + hx, workspace.x1 - hx))
            y = float(rng.uniform(workspace.y0 + hy, workspace.y1 - hy))
            pose = Pose2D(x, y, theta)
            fp = footprint(obj, pose)
            ok = True
            for other, ofp in zip(placed, fps):
                limit = overlap_frac * min(area, ofp.area())
                if intersection_area(fp, ofp) > limit:
                    ok = False
                    break
            if ok:
                placed.append(Placed(obj, pose))
                fps.append(fp)
                break
        k = len(placed)
    return Scene(workspace, tuple(placed))


# --- serialization -----------------------------------------------------------


def shape_to_dict(shape):
    if isinstance(shape, Circle):
        return {"type": "circle", "radius": shape.radius}
    if isinstance(shape, Rect):
        return {"type": "rect", "w": shape.w, "h": shape.h}
    if isinstance(shape, Ellipse):
        return {"type": "ellipse", "a": shape.a, "b": shape.b}
    return {"type": "polygon", "vertices": [list(v) for v in shape.vertices]}


def shape_from_dict(d):
    kind = d["type"]
    if kind == "circle":
        return Circle(d["radius"])
    if kind == "rect":
        return Rect(d["w"], d["h"])
    if kind == "ellipse":
        return Ellipse(d["a"], d["b"])
    if kind == "polygon":
        return ConvexPolygon(tuple(tuple(v) for v in d["vertices"]))
    raise ConfigError(f"unknown shape type {kind!r}")


def object_to_dict(obj: ObjectModel):
    return {
        "id": obj.id,
        "shape": shape_to_dict(obj.shape),
        "material": obj.material.value,
        "height_mm": obj.height,
        "mass_g": obj.mass,
        "color": list(obj.color),
    }


def object_from_dict(d):
    return ObjectModel(
        id=d["id"],
        shape=shape_from_dict(d["shape"]),
        material=Material(d["material"]),
        height=d["height_mm"],
        mass=d["mass_g"],
        color=tuple(d["color"]),
    )


def scene_to_dict(scene: Scene):
    ws = scene.workspace
    return {
        "workspace": {"x0": ws.x0, "y0": ws.y0, "x1": ws.x1, "y1": ws.y1},
        "objects": [
            {**object_to_dict(p.obj), "pose": {"x": p.pose.x, "y": p.pose.y, "theta": p.pose.theta}}
            for p in scene.objects
        ],
    }


def scene_from_dict(d):
    ws = Workspace(**d["workspace"])
    objs = tuple(Placed(object_from_dict(o), Pose2D(**o["pose"])) for o in d["objects"])
    return Scene(ws, objs)


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=1)


def loads_scene(text: str) -> Scene:
    return scene_from_dict(json.loads(text))
