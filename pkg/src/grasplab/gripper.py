"""Parallel grippers, finger/object interaction classes and tolerance budgets."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, OpeningOutOfRange
from .scene import Material, ObjectModel

FingerMaterial = Material


class InteractionClass(enum.Enum):
    RIGID_RIGID = "RigidRigid"
    RIGID_SOFT = "RigidSoft"
    SOFT_RIGID = "SoftRigid"
    SOFT_SOFT = "SoftSoft"


_CLASSES = {
    (Material.RIGID, Material.RIGID): InteractionClass.RIGID_RIGID,
    (Material.RIGID, Material.SOFT): InteractionClass.RIGID_SOFT,
    (Material.SOFT, Material.RIGID): InteractionClass.SOFT_RIGID,
    (Material.SOFT, Material.SOFT): InteractionClass.SOFT_SOFT,
}


def classify_interaction(finger: Material, object_material: Material) -> InteractionClass:
    return _CLASSES[(finger, object_material)]


@dataclass(frozen=True)
class GripperSpec:
    n_fingers: int = 2
    material: Material = Material.RIGID
    pad_w: float = 10.0
    pad_len: float = 30.0
    pad_gap: float = 24.0
    max_open: float = 160.0
    min_close: float = 0.0
    soft_depth: float = 0.0
    soft_angle: float = 0.0

    def __post_init__(self):
        if self.n_fingers not in (2, 4):
            raise ConfigError("n_fingers must be 2 or 4")
        if not (self.max_open > self.min_close >= 0):
            raise ConfigError("need max_open > min_close >= 0")
        if not (self.pad_w > 0 and self.pad_len > 0):
            raise ConfigError("pad dimensions must be > 0")
        if self.n_fingers == 4 and not self.pad_gap > 0:
            raise ConfigError("4-finger grippers need pad_gap > 0")
        if self.material is Material.RIGID and (self.soft_depth or self.soft_angle):
            raise ConfigError("rigid pads cannot have soft_depth/soft_angle")

    @property
    def span(self):
        """Length of the contact band perpendicular to the closing direction."""
        return self.pad_len + self.pad_gap if self.n_fingers == 4 else self.pad_len

    @property
    def span_factor(self):
        return self.span / self.pad_len

    @property
    def tag(self):
        return f"{self.n_fingers}Finger-{self.material.value.capitalize()}"

    def to_dict(self):
        d = asdict(self)
        d["material"] = self.material.value
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["material"] = Material(d.get("material", "rigid"))
        return cls(**d)


def make_gripper(n_fingers=2, material=Material.RIGID, **overrides) -> GripperSpec:
    """Gripper with the RG6-class defaults; soft pads get 12 mm depth and 15 degrees."""
    material = Material(material)
    base = {}
    if material is Material.SOFT:
        base = {"soft_depth": 12.0, "soft_angle": math.radians(15.0)}
    base.update(overrides)
    return GripperSpec(n_fingers=n_fingers, material=material, **base)


def precise(material=Material.SOFT, **kw):
    return make_gripper(2, material, **kw)


def power(material=Material.SOFT, **kw):
    return make_gripper(4, material, **kw)


def pad_polygons(spec: GripperSpec, u, opening: float):
    """Pad rectangles (CCW, world frame) for grasp ``u`` at jaw ``opening``."""
    if not (spec.min_close <= opening <= spec.max_open):
        raise OpeningOutOfRange(f"opening {opening} outside [{spec.min_close}, {spec.max_open}]")
    d = np.array([math.cos(u.phi), math.sin(u.phi)])
    n = np.array([-d[1], d[0]])
    c = np.array([u.x, u.y])
    offsets = [0.0] if spec.n_fingers == 2 else [-spec.pad_gap / 2.0, spec.pad_gap / 2.0]
    hw = spec.pad_w / 2.0
    hl = spec.pad_len / 2.0
    pads = []
    for side in (1.0, -1.0):
        for off in offsets:
            pc = c + side * (opening / 2.0) * d + off * n
            pads.append(
                np.array([pc - hw * d - hl * n, pc + hw * d - hl * n, pc + hw * d + hl * n, pc - hw * d + hl * n])
            )
    return pads


@dataclass(frozen=True)
class ToleranceModel:
    pos_tol0: float = 4.0
    ang_tol0: float = math.radians(10.0)
    h_ref: float = 40.0
    pinch_margin: float = 10.0

    def with_(self, **kw):
        return replace(self, **kw)


def tolerance_budget(spec: GripperSpec, obj: ObjectModel, model: ToleranceModel = ToleranceModel()):
    """Positional (mm) and angular (rad) slack for grasping ``obj`` with ``spec``."""
    pos = model.pos_tol0
    ang = model.ang_tol0
    if spec.material is Material.SOFT:
        f = min(max(obj.height / model.h_ref, 0.0), 1.0)
        pos += spec.soft_depth * f
        ang += spec.soft_angle * f
    if obj.material is Material.SOFT:
        ang = math.pi
        pos += model.pinch_margin
    if spec.n_fingers == 4:
        pos *= spec.span_factor
    return pos, ang
