import json

import numpy as np
import pytest

from grasplab.bench import train_on
from grasplab.collect import (
    CollectConfig,
    collect,
    dataset_setups,
    largest_remainder,
    load_dataset,
    merge_shards,
    mix,
    save_dataset,
)
from grasplab.errors import ConfigError, InsufficientSource, ManifestMismatch
from grasplab.gripper import make_gripper
from grasplab.learn import TrainConfig

SOFT4 = make_gripper(4, "soft")
RIGID2 = make_gripper(2, "rigid")


def keys(ds):
    return [r.key() for r in ds.records]


@pytest.fixture(scope="module")
def small():
    return collect(CollectConfig("YCB-16", SOFT4, 60, 3, objects_per_scene=3))


def test_config_validation():
    with pytest.raises(ConfigError):
        CollectConfig("YCB-16", SOFT4, 0)
    with pytest.raises(ConfigError):
        CollectConfig("YCB-16", SOFT4, 5, epsilon=1.5)
    with pytest.raises(ConfigError):
        CollectConfig("YCB-16", SOFT4, 5, policy="guided")
    cfg = CollectConfig("SoftToys25", RIGID2, 7, 2, reset="persistent")
    assert CollectConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_soft_toys_easier_than_rigid_level2():
    toys = collect(CollectConfig("SoftToys25", RIGID2, 100, 0))
    hard = collect(CollectConfig("Level2-8", RIGID2, 100, 0, objects_per_scene=3))
    assert toys.success_count / len(toys) > hard.success_count / max(len(hard), 1)
    # rigid fingers on rigid objects e-stop, and those attempts carry no record
    assert hard.manifest["estop_count"] > 0
    assert len(hard) + hard.manifest["estop_count"] == 100


def test_collect_deterministic(small):
    again = collect(CollectConfig("YCB-16", SOFT4, 60, 3, objects_per_scene=3))
    assert keys(small) == keys(again)
    assert small.manifest == again.manifest
    other = collect(CollectConfig("YCB-16", SOFT4, 60, 4, objects_per_scene=3))
    assert keys(small) != keys(other)


def test_records_consistent(small):
    for r in small.records:
        assert r.reward == int(r.outcome.is_success)
        assert r.patch.shape == (32, 32, 3) and r.patch.dtype == np.float32
        assert not r.outcome.is_estop
    m = small.manifest
    assert m["success_count"] + m["failure_count"] == m["total"] == len(small)


def test_guided_with_full_exploration_is_random(small):
    from grasplab.learn import init_params
    from grasplab.config import desk_preset

    params = init_params(desk_preset().net, 0)
    g = collect(CollectConfig("YCB-16", SOFT4, 60, 3, "guided", "unused", 1.0, 3), model=params)
    assert keys(g) == keys(small)


def test_sharded_collection_matches_single_run(small):
    parts = [collect(CollectConfig("YCB-16", SOFT4, 60, 3, objects_per_scene=3), attempts=range(a, b))
             for a, b in ((0, 17), (17, 40), (40, 60))]
    merged = merge_shards(parts)
    assert sorted(keys(merged)) == sorted(keys(small))
    assert merged.manifest["attempts"] == 60


def test_persistent_reset_keeps_scene():
    ds = collect(CollectConfig("SoftToys25", SOFT4, 40, 1, reset="persistent"))
    seeds = [r.scene_seed for r in ds.records]
    assert len(set(seeds)) < len(seeds)
    with pytest.raises(ConfigError):
        collect(CollectConfig("SoftToys25", SOFT4, 40, 1, reset="persistent"), attempts=range(10, 20))


def test_largest_remainder():
    assert largest_remainder([0.5, 0.5], 5000) == [2500, 2500]
    assert largest_remainder([0.5, 0.5], 3) == [2, 1]
    assert largest_remainder([0.2, 0.3, 0.5], 7) == [1, 2, 4]
    with pytest.raises(ConfigError):
        largest_remainder([0.5, 0.6], 10)


def test_mix(small):
    other = collect(CollectConfig("SoftToys25", SOFT4, 40, 9))
    m = mix([small, other], [0.5, 0.5], 30, 0)
    assert len(m) == 30
    a, b = set(keys(small)), set(keys(other))
    ks = keys(m)
    assert sum(k in a for k in ks) == 15 and sum(k in b for k in ks) == 15
    assert all((k in a) != (k in b) for k in ks)
    assert len(set(ks)) == len(ks)  # without replacement
    assert [s["count"] for s in m.manifest["sources"]] == [15, 15]
    single = mix([small], [1.0], 10, 1)
    assert set(keys(single)) <= a
    assert keys(mix([small, other], [0.5, 0.5], 30, 0)) == ks
    with pytest.raises(InsufficientSource):
        mix([small, other], [0.5, 0.5], 2 * len(other) + 2, 0)


def test_save_load_round_trip(small, tmp_path):
    d = save_dataset(small, tmp_path / "ds")
    back = load_dataset(d)
    assert keys(back) == keys(small)
    assert back.manifest["total"] == len(small)
    assert back.attempts == small.attempts
    lines = (d / "records.jsonl").read_text().splitlines()
    assert len(lines) == len(small) and {"bin", "reward", "offset", "length"} <= set(json.loads(lines[0]))


def test_corrupt_dataset_detected(small, tmp_path):
    d = save_dataset(small, tmp_path / "ds")
    blob = (d / "patches.bin").read_bytes()
    (d / "patches.bin").write_bytes(blob[:-4])
    with pytest.raises(ManifestMismatch):
        load_dataset(d)
    flipped = bytearray(blob)
    flipped[10] ^= 0xFF
    (d / "patches.bin").write_bytes(bytes(flipped))
    with pytest.raises(ManifestMismatch):
        load_dataset(d)
    (d / "patches.bin").write_bytes(blob)
    m = json.loads((d / "manifest.json").read_text())
    m["success_count"] += 1
    (d / "manifest.json").write_text(json.dumps(m))
    with pytest.raises(ManifestMismatch):
        load_dataset(d)
    with pytest.raises(ManifestMismatch):
        load_dataset(tmp_path / "nowhere")


def test_guided_beats_random_collection():
    src = collect(CollectConfig("YCB-16", SOFT4, 1500, 100, objects_per_scene=3))
    params, _ = train_on(src, cfg=TrainConfig(epochs=8, augment=True))
    wins = 0
    for seed in range(5):
        rnd = collect(CollectConfig("YCB-16", SOFT4, 100, seed, objects_per_scene=3))
        gd = collect(CollectConfig("YCB-16", SOFT4, 100, seed, "guided", "in-memory", 0.2, 3), model=params)
        wins += gd.success_count / len(gd) >= rnd.success_count / len(rnd)
    assert wins >= 3


def test_dataset_setups():
    s = dataset_setups(scale=0.01)
    assert s["2Finger-RigidSoft"].n_attempts == 50 and s["2Finger-RigidRigid"].n_attempts == 5
    g = dataset_setups(scale=0.01, guide_model="m.bin")
    assert g["4Finger-SoftRigid-Guided"].policy == "guided" and g["2Finger-SoftRigid-Guided"].gripper.n_fingers == 2
