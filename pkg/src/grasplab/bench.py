"""Evaluation harness: single-object tests, clutter removal, data-size ablation, reports."""

from __future__ import annotations

import csv
import json
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .collect import Dataset, mix
from .config import Preset, desk_preset, stable_hash, thread_cap
from .errors import ConfigError, NonPositiveTime
from .gripper import GripperSpec, make_gripper
from .learn import TrainConfig, init_params, model_hash, train
from .oracle import DEFAULT_ORACLE, GraspEvaluator, OracleConfig
from .policy import DensePolicy, Policy
from .presets import LEVEL1_8, LEVEL2_8, object_set
from .render import render
from .scene import Scene, place_randomly

DEFAULT_TE = 10.4


def compute_mpph(success_rate, t_c, t_e):
    """Picks per hour: ``3600 * success_rate / (t_c + t_e)`` with times in seconds."""
    total = t_c + t_e
    if not total > 0:
        raise NonPositiveTime(f"t_c + t_e must be > 0, got {total}")
    return 3600.0 * success_rate / total


@dataclass
class Metrics:
    name: str
    attempts: int
    successes: int
    t_c: float
    t_e: float
    kind: str = "object"
    cleared: bool | None = None

    @property
    def failures(self):
        return self.attempts - self.successes

    @property
    def success_rate(self):
        return self.successes / self.attempts if self.attempts else 0.0

    @property
    def mpph(self):
        return compute_mpph(self.success_rate, self.t_c, self.t_e)

    def row(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "attempts": self.attempts,
            "successes": self.successes,
            "failures": self.failures,
            "success_rate": self.success_rate,
            "t_c": self.t_c,
            "t_e": self.t_e,
            "mpph": self.mpph,
        }


def aggregate(name, rows, kind="aggregate"):
    """Pooled metrics: attempt-weighted success rate and mean computation time."""
    att = sum(r.attempts for r in rows)
    suc = sum(r.successes for r in rows)
    t_c = sum(r.t_c * r.attempts for r in rows) / att if att else 0.0
    t_e = rows[0].t_e if rows else DEFAULT_TE
    return Metrics(name, att, suc, t_c, t_e, kind)


@dataclass(frozen=True)
class Recipe:
    name: str
    sources: tuple  # ((dataset tag, proportion), ...)
    test_gripper: GripperSpec
    label: str = ""


def _soft(n):
    return make_gripper(n, "soft")


RS, SR4, SR4G, SR2G = "2Finger-RigidSoft", "4Finger-SoftRigid", "4Finger-SoftRigid-Guided", "2Finger-SoftRigid-Guided"

RECIPES = {
    "t1": Recipe("t1", ((RS, 1.0),), _soft(4)),
    "t2": Recipe("t2", ((SR4, 1.0),), _soft(4)),
    "t3": Recipe("t3", ((RS, 0.5), (SR4, 0.5)), _soft(4)),
    "t4": Recipe("t4", ((RS, 0.5), (SR4G, 0.5)), _soft(4), "Power"),
    "t5": Recipe("t5", ((RS, 0.5), (SR2G, 0.5)), _soft(4), "Precise-Power"),
    "t6": Recipe("t6", ((RS, 0.5), (SR4G, 0.5)), _soft(2), "Power-Precise"),
    "t7": Recipe("t7", ((RS, 0.5), (SR2G, 0.5)), _soft(2), "Precise"),
}


def recipe(name) -> Recipe:
    try:
        return RECIPES[name]
    except KeyError:
        raise ConfigError(f"unknown test {name!r}; choose from {sorted(RECIPES)}") from None


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    test_gripper: GripperSpec
    object_sets: tuple = ("Level1-8", "Level2-8")
    attempts_per_object: int = 10
    seeds: tuple = (0,)
    t_e: float = DEFAULT_TE
    recipe: str | None = None
    total: int = 5000

    def __post_init__(self):
        if self.attempts_per_object < 1:
            raise ConfigError("attempts_per_object must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")

    def to_dict(self):
        d = asdict(self)
        d["test_gripper"] = self.test_gripper.to_dict()
        d["object_sets"] = list(self.object_sets)
        d["seeds"] = list(self.seeds)
        return d


def spec_for(test: str, **kw) -> ExperimentSpec:
    r = recipe(test)
    return ExperimentSpec(name=test, test_gripper=r.test_gripper, recipe=test, **kw)


@dataclass
class BenchReport:
    name: str
    rows: list  # Metrics, per object / trial first, then aggregates
    config: dict
    model_hash: str | None = None
    started: float = field(default_factory=time.time)
    finished: float = 0.0
    outcomes: list = field(default_factory=list)  # (row name, attempt, outcome string)

    @property
    def config_hash(self):
        return stable_hash(self.config)

    def get(self, name) -> Metrics:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def overall(self) -> Metrics:
        return self.get("overall")

    def to_dict(self):
        return {
            "name": self.name,
            "rows": [r.row() for r in self.rows],
            "config": self.config,
            "config_hash": self.config_hash,
            "model_hash": self.model_hash,
            "timestamps": {"started": self.started, "finished": self.finished},
            "outcomes": [list(o) for o in self.outcomes],
        }


def _seed_for(*parts):
    key = [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint32)[0])


def _attempt(policy: Policy, scene: Scene, preset: Preset, gripper, oracle, rng):
    image = render(scene, preset.camera)
    t0 = time.perf_counter()
    prop = policy.propose(image, preset.camera, scene, rng)
    t_c = time.perf_counter() - t0
    outcome, after = GraspEvaluator(scene, gripper, oracle).execute(prop.u)
    return outcome, after, t_c


def run_single_object_eval(spec: ExperimentSpec, policy: Policy, preset: Preset | None = None,
                           oracle: OracleConfig = DEFAULT_ORACLE, model_hash_: str | None = None) -> BenchReport:
    """Each object alone in the bin, ``attempts_per_object`` fresh placements per seed.

    Emergency stops count as failed attempts.
    """
    preset = preset or desk_preset()
    rows, level_rows, outcomes = [], [], []
    for set_name in spec.object_sets:
        per_obj = []
        for obj in object_set(set_name).members:
            succ, tcs = 0, []
            for seed in spec.seeds:
                for a in range(spec.attempts_per_object):
                    s = _seed_for(seed, obj.id, a)
                    scene = place_randomly([obj], preset.workspace, 1, s)
                    rng = np.random.default_rng([s, 7])
                    outcome, _, t_c = _attempt(policy, scene, preset, spec.test_gripper, oracle, rng)
                    succ += outcome.is_success
                    tcs.append(t_c)
                    outcomes.append((obj.id, a, str(outcome)))
            m = Metrics(obj.id, len(tcs), int(succ), float(np.mean(tcs)), spec.t_e, "object")
            per_obj.append(m)
        rows += per_obj
        level_rows.append(aggregate(set_name, per_obj, "level"))
    rows += level_rows
    rows.append(aggregate("overall", rows[: len(rows) - len(level_rows)], "overall"))
    cfg = {"spec": spec.to_dict(), "policy": policy.name, "preset": preset.name}
    rep = BenchReport(spec.name, rows, cfg, model_hash_, outcomes=outcomes)
    rep.finished = time.time()
    return rep


def clutter_scene(preset: Preset, seed: int, n_each=5, overlap_frac=0.15) -> Scene:
    rng = np.random.default_rng([seed, 0xC1])
    l1 = [LEVEL1_8.members[i] for i in rng.permutation(len(LEVEL1_8.members))[:n_each]]
    l2 = [LEVEL2_8.members[i] for i in rng.permutation(len(LEVEL2_8.members))[:n_each]]
    return place_randomly(l1 + l2, preset.workspace, 2 * n_each, _seed_for(seed, "clutter"), overlap_frac,
                          largest_first=True)


def run_clutter_removal(policy: Policy, gripper: GripperSpec, trials=5, budget=20, seed=0, t_e=DEFAULT_TE,
                        preset: Preset | None = None, oracle: OracleConfig = DEFAULT_ORACLE, n_each=5,
                        overlap_frac=0.15, name="clutter", model_hash_: str | None = None) -> BenchReport:
    """Clear a 10-object clutter within ``budget`` attempts, ``trials`` times."""
    preset = preset or desk_preset()
    if 2 * n_each > budget:
        raise ConfigError("clutter size exceeds the attempt budget")
    rows, outcomes = [], []
    for t in range(trials):
        scene = clutter_scene(preset, _seed_for(seed, t), n_each, overlap_frac)
        rng = np.random.default_rng([seed, t, 3])
        succ, tcs = 0, []
        while len(scene) and len(tcs) < budget:
            outcome, scene, t_c = _attempt(policy, scene, preset, gripper, oracle, rng)
            succ += outcome.is_success
            tcs.append(t_c)
            outcomes.append((f"trial{t}", len(tcs) - 1, str(outcome)))
        rows.append(Metrics(f"trial{t}", len(tcs), succ, float(np.mean(tcs)), t_e, "trial", len(scene) == 0))
    rows.append(aggregate("overall", rows, "overall"))
    cfg = {"trials": trials, "budget": budget, "seed": seed, "t_e": t_e, "gripper": gripper.to_dict(),
           "policy": policy.name, "preset": preset.name, "n_each": n_each, "overlap_frac": overlap_frac}
    rep = BenchReport(name, rows, cfg, model_hash_, outcomes=outcomes)
    rep.finished = time.time()
    return rep


def build_training_set(sources: dict, recipe_: Recipe, total: int, seed: int) -> Dataset:
    """Mix the recipe's named datasets to ``total`` records."""
    missing = [tag for tag, _ in recipe_.sources if tag not in sources]
    if missing:
        raise ConfigError(f"recipe {recipe_.name} needs datasets {missing}")
    return mix([sources[tag] for tag, _ in recipe_.sources], [p for _, p in recipe_.sources], total, seed)


def train_on(ds: Dataset, preset: Preset | None = None, cfg: TrainConfig = TrainConfig()):
    preset = preset or desk_preset()
    x, b, y = ds.arrays()
    params = init_params(preset.net, cfg.seed)
    return train(params, x, b, y, cfg)


def run_ablation(train_set: Dataset, sizes, seeds, spec: ExperimentSpec, preset: Preset | None = None,
                 train_cfg: TrainConfig = TrainConfig(), oracle: OracleConfig = DEFAULT_ORACLE, sources=None,
                 workers=None):
    """Train on growing prefixes and evaluate each model.

    ``sources`` optionally maps seed to its own mixed training set; otherwise
    ``train_set`` is shared and only the training seed varies. Cells run on up
    to ``workers`` threads (default ``GRASPLAB_THREADS``). Returns a list of
    dicts ``{size, mean, sd, per_seed}`` with success rates in [0, 1].
    """
    preset = preset or desk_preset()
    sizes = list(sizes)
    if sizes != sorted(sizes) or not sizes or sizes[0] < 1:
        raise ConfigError("sizes must be ascending positive integers")
    workers = thread_cap() if workers is None else max(1, int(workers))

    def cell(n, seed):
        ds = sources[seed] if sources else train_set
        params, _ = train_on(ds.prefix(n), preset, TrainConfig(**{**train_cfg.to_dict(), "seed": seed}))
        ev = ExperimentSpec(spec.name, spec.test_gripper, spec.object_sets, spec.attempts_per_object,
                            (seed,), spec.t_e)
        return run_single_object_eval(ev, DensePolicy(params, preset.crop), preset, oracle).overall.success_rate

    cells = [(n, seed) for n in sizes for seed in seeds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rates = list(pool.map(lambda c: cell(*c), cells))
    else:
        rates = [cell(*c) for c in cells]
    curve = []
    for i, n in enumerate(sizes):
        r = rates[i * len(seeds) : (i + 1) * len(seeds)]
        curve.append({"size": n, "mean": float(np.mean(r)), "sd": float(np.std(r)), "per_seed": r})
    return curve


def ordering_violations(oracle_rep: BenchReport, trained_rep: BenchReport, random_rep: BenchReport):
    """Names of violated links in oracle >= trained >= random (overall success rate)."""
    o, t, r = (x.overall.success_rate for x in (oracle_rep, trained_rep, random_rep))
    bad = []
    if o < t:
        bad.append("oracle<trained")
    if t < r:
        bad.append("trained<random")
    return bad


def emit_report(rep: BenchReport, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "report.json").write_text(json.dumps(rep.to_dict(), indent=1, sort_keys=True))
    with open(d / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "kind", "attempts", "successes", "success_rate", "t_c", "t_e", "mpph"])
        for r in rep.rows:
            w.writerow([r.name, r.kind, r.attempts, r.successes, repr(r.success_rate), repr(r.t_c), repr(r.t_e),
                        repr(r.mpph)])
    cfg = {"config": rep.config, "config_hash": rep.config_hash, "model_hash": rep.model_hash}
    (d / "config.json").write_text(json.dumps(cfg, indent=1, sort_keys=True))
    return d


def model_hash_of(params):
    return model_hash(params) if params is not None else None


# published clutter-removal rows: (label, t_c s, t_e s, success rate %, reported MPPH)
PUBLISHED_CLUTTER = (
    ("Precise", 10.3, 11.2, 35.05, 104.34),
    ("Power", 10.1, 10.4, 66.67, 208.13),
    ("Precise-Power", 10.2, 10.3, 81.97, 255.90),
    ("FCN", 0.16, 10.4, 74.63, 452.28),
)


def published_mpph_constants():
    """Reported MPPH divided by ``success_rate / (t_c + t_e)`` for each published clutter row."""
    return [mpph / ((sr / 100.0) / (tc + te)) for _, tc, te, sr, mpph in PUBLISHED_CLUTTER]
