"""Deterministic grasp-outcome simulator.

A grasp attempt runs three stages:

1. descent with the jaws fully open; pads landing on an object taller than
   the clearance either trigger an emergency stop (rigid pad on rigid object)
   or must be absorbed by the soft party's conforming depth;
2. closing; each jaw contacts the first object inside its band, both jaws
   must meet the same object and its width must fit the jaw range;
3. alignment; the closing direction must lie within the angular tolerance of
   the object's locally narrowest direction and the grasp centre within the
   positional tolerance of its footprint.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import PhiOutOfRange
from .gripper import GripperSpec, InteractionClass, ToleranceModel, classify_interaction, tolerance_budget
from .scene import Material, Scene, remove_object

# comparisons against tolerances are inclusive up to this slack (radians / mm)
EPS = 1e-9


@dataclass(frozen=True)
class GraspConfig:
    x: float
    y: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.phi < math.pi):
            raise PhiOutOfRange(f"phi={self.phi} outside [0, pi)")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("grasp centre must be finite")

    @property
    def direction(self):
        return math.cos(self.phi), math.sin(self.phi)

    def to_dict(self):
        return {"x": self.x, "y": self.y, "phi": self.phi}


class OutcomeKind(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    EMERGENCY_STOP = "EmergencyStop"


class FailureReason(enum.Enum):
    NO_CONTACT = "NoContact"
    TOO_WIDE = "TooWide"
    BAD_ALIGNMENT = "BadAlignment"
    MULTI_OBJECT_PINCH = "MultiObjectPinch"
    INSUFFICIENT_PURCHASE = "InsufficientPurchase"


@dataclass(frozen=True)
class GraspOutcome:
    kind: OutcomeKind
    object_id: str | None = None
    reason: FailureReason | None = None

    @classmethod
    def success(cls, obj_id):
        return cls(OutcomeKind.SUCCESS, obj_id)

    @classmethod
    def failure(cls, reason, obj_id=None):
        return cls(OutcomeKind.FAILURE, obj_id, reason)

    @classmethod
    def estop(cls, obj_id=None):
        return cls(OutcomeKind.EMERGENCY_STOP, obj_id)

    @property
    def is_success(self):
        return self.kind is OutcomeKind.SUCCESS

    @property
    def is_estop(self):
        return self.kind is OutcomeKind.EMERGENCY_STOP

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "object_id": self.object_id,
            "reason": None if self.reason is None else self.reason.value,
        }

    @classmethod
    def from_dict(cls, d):
        reason = d.get("reason")
        return cls(OutcomeKind(d["kind"]), d.get("object_id"), None if reason is None else FailureReason(reason))

    def __str__(self):
        if self.reason is not None:
            return f"{self.kind.value}({self.reason.value})"
        return self.kind.value


@dataclass(frozen=True)
class OracleConfig:
    descent_clearance: float = 25.0
    soft_object_depth: float = 20.0
    width_tie_rel: float = 1e-3
    sweep_dirs: int = 180
    tolerance: ToleranceModel = field(default_factory=ToleranceModel)
    flip_rate: float = 0.0
    flip_seed: int = 0


DEFAULT_ORACLE = OracleConfig()


def angular_distance(a, b):
    """Distance between two undirected axes, in [0, pi/2]."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


class GraspEvaluator:
    """Evaluates many grasps on one (scene, gripper) pair, caching width sweeps.

    Results are independent of call order; the cache only stores pure values.
    """

    def __init__(self, scene: Scene, gripper: GripperSpec, config: OracleConfig = DEFAULT_ORACLE):
        self.scene = scene
        self.gripper = gripper
        self.config = config
        self.fps = scene.footprints
        self.objs = [p.obj for p in scene.objects]
        g = gripper
        self.half_open = g.max_open / 2.0
        self.half_span = g.span / 2.0
        self.reach = math.hypot(self.half_open + g.pad_w / 2.0, self.half_span)
        if g.n_fingers == 2:
            self.pad_bands = [(-g.pad_len / 2.0, g.pad_len / 2.0)]
        else:
            o = g.pad_gap / 2.0
            self.pad_bands = [(-o - g.pad_len / 2.0, -o + g.pad_len / 2.0), (o - g.pad_len / 2.0, o + g.pad_len / 2.0)]
        self._centres = np.array([[f.cx, f.cy] for f in self.fps]).reshape(-1, 2)
        self._bounds = np.array([f.bound for f in self.fps])
        self._tol = [tolerance_budget(g, o, config.tolerance) for o in self.objs]
        self._sweeps = {}

    def nearby(self, x, y):
        if not len(self.fps):
            return []
        d = np.hypot(self._centres[:, 0] - x, self._centres[:, 1] - y)
        return np.flatnonzero(d <= self._bounds + self.reach).tolist()

    def near_min_directions(self, idx, x, y):
        """Sweep angles (radians) whose band-restricted width is within tolerance of the minimum."""
        key = (idx, x, y)
        hit = self._sweeps.get(key)
        if hit is None:
            n = self.config.sweep_dirs
            ext = kernels.sweep_extents(self.fps[idx].verts, x, y, self.half_span, n)
            best = ext.min()
            if not np.isfinite(best):
                hit = np.zeros(0)
            else:
                hit = np.flatnonzero(ext <= best * (1.0 + self.config.width_tie_rel)) * (math.pi / n)
            self._sweeps[key] = hit
        return hit

    def evaluate(self, u: GraspConfig):
        """Return ``(GraspOutcome, target index or None)`` without touching the scene."""
        g = self.gripper
        cfg = self.config
        c = (u.x, u.y)
        d = u.direction
        near = self.nearby(u.x, u.y)

        # descent
        p_in = self.half_open - g.pad_w / 2.0
        p_out = self.half_open + g.pad_w / 2.0
        blocked = None
        for i in near:
            obj = self.objs[i]
            if obj.height <= cfg.descent_clearance:
                continue
            fp = self.fps[i]
            depth = 0.0
            for lo, hi in self.pad_bands:
                iv = fp.interval(c, d, lo, hi)
                if iv is None:
                    continue
                t0, t1 = iv
                if t1 > p_in and t0 < p_out:
                    depth = max(depth, min(t1 - p_in, p_out - t0))
                if -t0 > p_in and -t1 < p_out:
                    depth = max(depth, min(-t0 - p_in, p_out + t1))
            if depth <= 0.0:
                continue
            if classify_interaction(g.material, obj.material) is InteractionClass.RIGID_RIGID:
                return GraspOutcome.estop(obj.id), None
            allowed = 0.0
            if g.material is Material.SOFT:
                allowed += g.soft_depth
            if obj.material is Material.SOFT:
                allowed += cfg.soft_object_depth
            if depth > allowed + EPS and blocked is None:
                blocked = obj.id
        if blocked is not None:
            return GraspOutcome.failure(FailureReason.NO_CONTACT, blocked), None

        # closing
        plus = minus = None
        for i in near:
            iv = self.fps[i].interval(c, d, -self.half_span, self.half_span)
            if iv is None or iv[1] <= -self.half_open or iv[0] >= self.half_open:
                continue
            if plus is None or iv[1] > plus[1]:
                plus = (i, iv[1], iv)
            if minus is None or iv[0] < minus[1]:
                minus = (i, iv[0], iv)
        if plus is None:
            return GraspOutcome.failure(FailureReason.NO_CONTACT), None
        if plus[0] != minus[0]:
            return GraspOutcome.failure(FailureReason.MULTI_OBJECT_PINCH), None
        t = plus[0]
        obj = self.objs[t]
        lo, hi = plus[2]
        w = hi - lo
        if w > g.max_open or w < g.min_close:
            return GraspOutcome.failure(FailureReason.TOO_WIDE, obj.id), t

        # alignment
        pos_tol, ang_tol = self._tol[t]
        fp = self.fps[t]
        if fp.is_circle or ang_tol >= math.pi:
            beta = 0.0
        else:
            dirs = self.near_min_directions(t, u.x, u.y)
            if dirs.size == 0:
                beta = math.pi / 2
            else:
                beta = min(angular_distance(u.phi, a) for a in dirs)
        if beta > ang_tol + EPS:
            return GraspOutcome.failure(FailureReason.BAD_ALIGNMENT, obj.id), t
        if obj.material is Material.SOFT:
            # tissue is pinched only within the pads' half span, which every closing direction reaches
            pos_tol = min(pos_tol, self.half_span)
        if fp.distance(c) > pos_tol + EPS:
            return GraspOutcome.failure(FailureReason.INSUFFICIENT_PURCHASE, obj.id), t
        return GraspOutcome.success(obj.id), t

    def execute(self, u: GraspConfig):
        outcome, target = self.evaluate(u)
        if self.config.flip_rate > 0.0 and not outcome.is_estop:
            outcome = _maybe_flip(outcome, target, self, u)
        if outcome.is_success:
            return outcome, remove_object(self.scene, outcome.object_id)
        return outcome, self.scene


def _maybe_flip(outcome, target, ev, u):
    key = f"{ev.config.flip_seed}|{ev.scene.digest()}|{u.x!r}|{u.y!r}|{u.phi!r}"
    h = int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little") / 2**64
    if h >= ev.config.flip_rate:
        return outcome
    if outcome.is_success:
        return GraspOutcome.failure(FailureReason.INSUFFICIENT_PURCHASE, outcome.object_id)
    if target is not None:
        return GraspOutcome.success(ev.objs[target].id)
    return outcome


def execute_grasp(scene: Scene, gripper: GripperSpec, u: GraspConfig, config: OracleConfig = DEFAULT_ORACLE):
    """Run one grasp attempt. Returns ``(outcome, scene_after)``; only success removes an object."""
    return GraspEvaluator(scene, gripper, config).execute(u)


def bin_angles(n_bins=18):
    return (np.arange(n_bins) + 0.5) * (math.pi / n_bins)


def grid_centres(region, nx, ny):
    """Cell-centre coordinates of an ``nx`` by ``ny`` grid over ``region = (x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = region
    xs = x0 + (np.arange(nx) + 0.5) * ((x1 - x0) / nx)
    ys = y0 + (np.arange(ny) + 0.5) * ((y1 - y0) / ny)
    return xs, ys


def brute_force_success_map(scene: Scene, gripper: GripperSpec, grid=(21, 21), n_bins=18,
                            config: OracleConfig = DEFAULT_ORACLE, region=None):
    """Boolean ``(nx, ny, n_bins)`` map of grasp success at cell centres and bin-centre angles."""
    nx, ny = grid
    ws = scene.workspace
    region = region or (ws.x0, ws.y0, ws.x1, ws.y1)
    xs, ys = grid_centres(region, nx, ny)
    phis = bin_angles(n_bins)
    out = np.zeros((nx, ny, n_bins), dtype=bool)
    if not len(scene):
        return out
    ev = GraspEvaluator(scene, gripper, config)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if not ev.nearby(x, y):
                continue
            for k, phi in enumerate(phis):
                out[i, j, k] = ev.evaluate(GraspConfig(float(x), float(y), float(phi)))[0].is_success
    return out


@dataclass(frozen=True)
class AttemptLog:
    u: GraspConfig
    gripper: GripperSpec
    outcome: GraspOutcome
    interaction: InteractionClass | None
    scene_hash: str
    seed: int

    def to_json(self):
        return json.dumps(
            {
                "u": self.u.to_dict(),
                "gripper": self.gripper.to_dict(),
                "outcome": self.outcome.to_dict(),
                "interaction": None if self.interaction is None else self.interaction.value,
                "scene_hash": self.scene_hash,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        inter = d["interaction"]
        return cls(
            u=GraspConfig(**d["u"]),
            gripper=GripperSpec.from_dict(d["gripper"]),
            outcome=GraspOutcome.from_dict(d["outcome"]),
            interaction=None if inter is None else InteractionClass(inter),
            scene_hash=d["scene_hash"],
            seed=d["seed"],
        )


def attempt_log(scene, gripper, u, outcome, seed):
    inter = None
    if outcome.object_id is not None:
        obj = scene.objects[scene.index(outcome.object_id)].obj
        inter = classify_interaction(gripper.material, obj.material)
    return AttemptLog(u, gripper, outcome, inter, scene.digest(), seed)
