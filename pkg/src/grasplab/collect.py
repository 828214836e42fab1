"""Self-supervised data collection, dataset mixing and dataset files.

A dataset directory holds::

    manifest.json    counts, tags, config hash, patch shape, payload hash
    records.jsonl    one JSON object per training record (offset/length into patches.bin)
    attempts.jsonl   one attempt log per grasp attempt, emergency stops included
    patches.bin      concatenated little-endian float32 patches
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import Preset, desk_preset, stable_hash
from .errors import ConfigError, InsufficientSource, ManifestMismatch
from .gripper import GripperSpec, make_gripper
from .learn import ModelParams, angle_to_bin, load_model
from .oracle import DEFAULT_ORACLE, GraspEvaluator, GraspOutcome, OracleConfig, attempt_log
from .policy import dense_policy, random_policy
from .presets import object_set
from .render import extract_patch, patch_center, render
from .scene import place_randomly

DATASET_VERSION = 1
TOYS_PER_SCENE = 5
YCB_PER_SCENE = 3  # the larger rigid analogs do not fit five to a bin without overlap


@dataclass(frozen=True)
class CollectConfig:
    object_set: str
    gripper: GripperSpec
    n_attempts: int
    seed: int = 0
    policy: str = "random"  # random | guided
    model_path: str | None = None
    epsilon: float = 0.2
    objects_per_scene: int = 5
    overlap_frac: float = 0.0
    reset: str = "fresh"  # fresh: new placement every attempt; persistent: keep clutter until cleared
    name: str = ""

    def __post_init__(self):
        if self.n_attempts < 1:
            raise ConfigError("n_attempts must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must be in [0, 1]")
        if self.policy not in ("random", "guided"):
            raise ConfigError(f"unknown collection policy {self.policy!r}")
        if self.policy == "guided" and not self.model_path:
            raise ConfigError("guided collection needs model_path")
        if self.reset not in ("fresh", "persistent"):
            raise ConfigError(f"unknown reset rule {self.reset!r}")
        if self.objects_per_scene < 1:
            raise ConfigError("objects_per_scene must be >= 1")

    @property
    def tag(self):
        return self.name or f"{self.gripper.n_fingers}Finger-{self.object_set}-{self.policy}"

    def to_dict(self):
        return {
            "object_set": self.object_set,
            "gripper": self.gripper.to_dict(),
            "n_attempts": self.n_attempts,
            "seed": self.seed,
            "policy": self.policy,
            "model_path": self.model_path,
            "epsilon": self.epsilon,
            "objects_per_scene": self.objects_per_scene,
            "overlap_frac": self.overlap_frac,
            "reset": self.reset,
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        g = d.pop("gripper", {})
        gripper = GripperSpec.from_dict(g) if "material" in g and "pad_w" in g else make_gripper(
            g.get("n_fingers", 2), g.get("material", "rigid"))
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(gripper=gripper, **known)


@dataclass
class GraspRecord:
    patch: np.ndarray
    bin: int
    reward: int
    outcome: GraspOutcome
    gripper: str
    object_set: str
    policy: str
    scene_seed: int
    attempt: int = 0
    u: tuple = ()

    def meta(self):
        return {
            "bin": self.bin,
            "reward": self.reward,
            "outcome": self.outcome.to_dict(),
            "gripper": self.gripper,
            "object_set": self.object_set,
            "policy": self.policy,
            "scene_seed": self.scene_seed,
            "attempt": self.attempt,
            "u": list(self.u),
        }

    def key(self):
        """Hashable identity used for equality and multiset checks."""
        return (json.dumps(self.meta(), sort_keys=True), self.patch.astype("<f4").tobytes())


@dataclass
class Dataset:
    records: list
    manifest: dict = field(default_factory=dict)
    attempts: list = field(default_factory=list)  # AttemptLog JSON lines

    def __len__(self):
        return len(self.records)

    @property
    def success_count(self):
        return sum(r.reward for r in self.records)

    @property
    def failure_count(self):
        return len(self.records) - self.success_count

    def arrays(self):
        """``(patches, bins, rewards)`` stacked for training."""
        if not self.records:
            return np.zeros((0,)), np.zeros(0, np.int64), np.zeros(0, np.int64)
        x = np.stack([r.patch for r in self.records]).astype(np.float32, copy=False)
        b = np.array([r.bin for r in self.records], dtype=np.int64)
        y = np.array([r.reward for r in self.records], dtype=np.int64)
        return x, b, y

    def prefix(self, n):
        if n > len(self.records):
            raise InsufficientSource(f"asked for {n} records, dataset has {len(self.records)}")
        m = dict(self.manifest)
        m.update(_counts(self.records[:n]))
        m["prefix_of"] = self.manifest.get("config_hash")
        return Dataset(self.records[:n], m, [])


def _counts(records):
    s = sum(r.reward for r in records)
    return {"total": len(records), "success_count": s, "failure_count": len(records) - s}


def _attempt_seeds(seed, i):
    ss = np.random.SeedSequence([seed, i])
    scene_seed = int(ss.generate_state(1, np.uint32)[0])
    return scene_seed, np.random.default_rng([seed, i, 1]), np.random.default_rng([seed, i, 2])


def collect(cfg: CollectConfig, preset: Preset | None = None, oracle: OracleConfig = DEFAULT_ORACLE,
            attempts=None, model: ModelParams | None = None) -> Dataset:
    """Run grasp attempts and label them with the oracle.

    ``attempts`` restricts the run to a sub-range of attempt indices (sharding);
    every attempt draws from its own seed streams, so merged shards equal the
    full run. With the persistent reset rule the run must not be sharded.
    """
    preset = preset or desk_preset()
    members = object_set(cfg.object_set).members
    count = min(cfg.objects_per_scene, len(members))
    if cfg.policy == "guided" and model is None:
        model = load_model(cfg.model_path)
    idx = range(cfg.n_attempts) if attempts is None else attempts
    if cfg.reset == "persistent" and attempts is not None and (idx.start or 0) != 0:
        raise ConfigError("persistent-reset collection cannot be sharded")
    cam = preset.camera
    ws = preset.workspace
    records, logs = [], []
    n_estop = 0
    scene = None
    scene_seed = None
    for i in idx:
        s_seed, prng, erng = _attempt_seeds(cfg.seed, i)
        if cfg.reset == "fresh" or scene is None or len(scene) == 0:
            scene = place_randomly(members, ws, count, s_seed, cfg.overlap_frac)
            scene_seed = s_seed
        image = render(scene, cam)
        explore = cfg.policy == "random" or erng.random() < cfg.epsilon
        if explore:
            prop = random_policy(ws, prng)
        else:
            prop = dense_policy(model, image, cam, preset.crop)
        u = prop.u
        ev = GraspEvaluator(scene, cfg.gripper, oracle)
        outcome, after = ev.execute(u)
        logs.append(attempt_log(scene, cfg.gripper, u, outcome, scene_seed).to_json())
        if outcome.is_estop:
            n_estop += 1
        else:
            patch = extract_patch(image, patch_center(cam, u.x, u.y), preset.crop, preset.net_input)
            records.append(
                GraspRecord(patch, angle_to_bin(u.phi), int(outcome.is_success), outcome, cfg.gripper.tag,
                            cfg.object_set, prop.source, scene_seed, i, (u.x, u.y, u.phi))
            )
        scene = after
    manifest = {
        "version": DATASET_VERSION,
        "name": cfg.tag,
        "config": cfg.to_dict(),
        "config_hash": stable_hash(cfg.to_dict()),
        "preset": preset.name,
        "creation_seed": cfg.seed,
        "attempts": len(idx),
        "estop_count": n_estop,
        "patch_shape": [preset.net_input, preset.net_input, 3],
        **_counts(records),
    }
    return Dataset(records, manifest, logs)


def merge_shards(shards) -> Dataset:
    """Concatenate shards (ordered by attempt range) into one dataset."""
    shards = list(shards)
    if not shards:
        raise ConfigError("no shards to merge")
    records = [r for s in shards for r in s.records]
    logs = [a for s in shards for a in s.attempts]
    m = dict(shards[0].manifest)
    m.update(_counts(records))
    m["attempts"] = sum(s.manifest.get("attempts", 0) for s in shards)
    m["estop_count"] = sum(s.manifest.get("estop_count", 0) for s in shards)
    return Dataset(records, m, logs)


def largest_remainder(proportions, total):
    """Integer counts summing to ``total``; leftover units go to the largest fractional parts, lowest index first."""
    p = np.asarray(proportions, dtype=np.float64)
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ConfigError("proportions must be non-negative and sum to 1")
    raw = p * total
    base = np.floor(raw + 1e-9).astype(int)
    rem = raw - base
    left = total - int(base.sum())
    order = sorted(range(len(p)), key=lambda i: (-rem[i], i))
    for i in order[:left]:
        base[i] += 1
    return [int(v) for v in base]


def mix(datasets, proportions, total: int, seed: int) -> Dataset:
    """Sample ``round(p_i * total)`` records from each source without replacement, then shuffle."""
    if len(datasets) != len(proportions):
        raise ConfigError("one proportion per dataset")
    counts = largest_remainder(proportions, total)
    rng = np.random.default_rng([seed, 0x313])
    out, prov = [], []
    for k, (ds, n) in enumerate(zip(datasets, counts)):
        if n > len(ds):
            raise InsufficientSource(f"source {k} has {len(ds)} records, {n} requested")
        pick = np.sort(rng.choice(len(ds), size=n, replace=False)) if n else np.zeros(0, int)
        out += [ds.records[i] for i in pick]
        prov.append({"name": ds.manifest.get("name"), "config_hash": ds.manifest.get("config_hash"), "count": n})
    order = rng.permutation(len(out))
    out = [out[i] for i in order]
    manifest = {
        "version": DATASET_VERSION,
        "name": "mix(" + ",".join(str(p["name"]) for p in prov) + ")",
        "sources": prov,
        "proportions": [float(p) for p in proportions],
        "creation_seed": seed,
        "config_hash": stable_hash({"sources": prov, "proportions": list(map(float, proportions)), "seed": seed}),
        "patch_shape": datasets[0].manifest.get("patch_shape") if datasets else None,
        **_counts(out),
    }
    return Dataset(out, manifest, [])


# --- persistence -------------------------------------------------------------


def save_dataset(ds: Dataset, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    h = hashlib.sha256()
    offset = 0
    lines = []
    with open(d / "patches.bin", "wb") as fh:
        for r in ds.records:
            blob = np.ascontiguousarray(r.patch, dtype="<f4").tobytes()
            fh.write(blob)
            h.update(blob)
            meta = r.meta()
            meta["offset"] = offset
            meta["length"] = len(blob)
            meta["shape"] = list(r.patch.shape)
            lines.append(json.dumps(meta, sort_keys=True))
            offset += len(blob)
    (d / "records.jsonl").write_text("".join(line + "\n" for line in lines))
    (d / "attempts.jsonl").write_text("".join(a + "\n" for a in ds.attempts))
    manifest = dict(ds.manifest)
    manifest.update(_counts(ds.records))
    manifest["patches_bytes"] = offset
    manifest["patches_sha256"] = h.hexdigest()
    (d / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return d


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
        lines = (d / "records.jsonl").read_text().splitlines()
        blob = (d / "patches.bin").read_bytes()
        attempts_path = d / "attempts.jsonl"
        attempts = attempts_path.read_text().splitlines() if attempts_path.exists() else []
    except FileNotFoundError as e:
        raise ManifestMismatch(f"dataset file missing: {e.filename}") from e
    if len(blob) != manifest.get("patches_bytes"):
        raise ManifestMismatch(f"patches.bin has {len(blob)} bytes, manifest says {manifest.get('patches_bytes')}")
    if hashlib.sha256(blob).hexdigest() != manifest.get("patches_sha256"):
        raise ManifestMismatch("patches.bin hash differs from manifest")
    records = []
    for line in lines:
        m = json.loads(line)
        raw = blob[m["offset"] : m["offset"] + m["length"]]
        if len(raw) != m["length"]:
            raise ManifestMismatch("record points past the end of patches.bin")
        patch = np.frombuffer(raw, dtype="<f4").reshape(m["shape"]).astype(np.float32)
        records.append(
            GraspRecord(patch, m["bin"], m["reward"], GraspOutcome.from_dict(m["outcome"]), m["gripper"],
                        m["object_set"], m["policy"], m["scene_seed"], m.get("attempt", 0), tuple(m.get("u", ())))
        )
    counts = _counts(records)
    for k, v in counts.items():
        if manifest.get(k) != v:
            raise ManifestMismatch(f"manifest {k}={manifest.get(k)} but records give {v}")
    for r in records:
        if r.reward != int(r.outcome.is_success):
            raise ManifestMismatch("record reward disagrees with its outcome")
    return Dataset(records, manifest, attempts)


# --- named collection setups ---------------------------------------------------


def dataset_setups(scale=1.0, seed=0, guide_model: str | None = None, epsilon=0.2):
    """Collection configs named after the gripper/object pairings of the transfer study.

    ``scale`` multiplies the nominal attempt counts (5000 / 2500 / 500).
    """
    n = lambda k: max(1, int(round(k * scale)))  # noqa: E731
    rigid2 = make_gripper(2, "rigid")
    soft2 = make_gripper(2, "soft")
    soft4 = make_gripper(4, "soft")
    setups = {
        "2Finger-RigidRigid": CollectConfig("YCB-16", rigid2, n(500), seed, objects_per_scene=YCB_PER_SCENE, name="2Finger-RigidRigid"),
        "2Finger-RigidSoft": CollectConfig("SoftToys25", rigid2, n(5000), seed, name="2Finger-RigidSoft"),
        "4Finger-SoftRigid": CollectConfig("YCB-16", soft4, n(5000), seed, objects_per_scene=YCB_PER_SCENE, name="4Finger-SoftRigid"),
    }
    if guide_model:
        setups["4Finger-SoftRigid-Guided"] = CollectConfig(
            "YCB-16", soft4, n(2500), seed, "guided", guide_model, epsilon, YCB_PER_SCENE,
            name="4Finger-SoftRigid-Guided")
        setups["2Finger-SoftRigid-Guided"] = CollectConfig(
            "YCB-16", soft2, n(2500), seed, "guided", guide_model, epsilon, YCB_PER_SCENE,
            name="2Finger-SoftRigid-Guided")
    return setups


def with_seed(cfg: CollectConfig, seed: int) -> CollectConfig:
    return replace(cfg, seed=seed)
