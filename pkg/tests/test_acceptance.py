"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is repeated in the terminal summary.
The learning criteria share one cached pipeline per seed: collect the
rigid-soft and soft-rigid sets, train the mixed model, use it to guide the
two guided collections, then train the transfer recipes.
"""

import csv
import functools
import math
import time

import numpy as np

from conftest import ACCEPTANCE, BIN
from reference_oracle import ReferenceOracle
from grasplab.bench import (
    RS,
    SR2G,
    SR4,
    SR4G,
    ExperimentSpec,
    build_training_set,
    compute_mpph,
    emit_report,
    published_mpph_constants,
    recipe,
    run_ablation,
    run_clutter_removal,
    run_single_object_eval,
    train_on,
)
from grasplab.collect import collect, dataset_setups
from grasplab.config import desk_preset
from grasplab.gripper import make_gripper
from grasplab.learn import (
    TrainConfig,
    dense_predict,
    gradient_check,
    init_params,
    masked_loss,
    predict_q,
)
from grasplab.learn.net import forward
from grasplab.oracle import GraspConfig, GraspEvaluator, bin_angles, brute_force_success_map, grid_centres
from grasplab.policy import DensePolicy, HeuristicPolicy, OraclePolicy, dense_grid, dense_policy, sampled_policy
from grasplab.presets import LEVEL1_8, LEVEL2_8, SOFT_TOYS_25, YCB_16
from grasplab.render import extract_patch, render
from grasplab.scene import Circle, Material, place_randomly

PRE = desk_preset()
CAM = PRE.camera
TRAIN = TrainConfig(epochs=30, augment=True)
SCALE = 0.4  # 2000 attempts per unguided set, so each recipe mixes 4000 records
GUIDED_SCALE = 0.8  # 2000 guided attempts per set
TOTAL = 4000
GRIPPERS = [make_gripper(n, m) for n in (2, 4) for m in ("rigid", "soft")]
LEVELS = (LEVEL1_8.name, LEVEL2_8.name)


def verdict(n, ok, detail):
    ACCEPTANCE.append((n, bool(ok), detail))
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _train(ds, seed):
    t0 = time.process_time()
    params, _ = train_on(ds, PRE, TrainConfig(**{**TRAIN.to_dict(), "seed": seed}))
    return params, time.process_time() - t0


@functools.lru_cache(maxsize=None)
def pipeline(seed):
    base = dataset_setups(scale=SCALE, seed=seed)
    src = {k: collect(base[k], PRE) for k in (RS, SR4)}
    mix3 = build_training_set(src, recipe("t3"), TOTAL, seed)
    m3, cpu3 = _train(mix3, seed)
    guided = dataset_setups(scale=GUIDED_SCALE, seed=seed, guide_model="in-memory")
    for tag in (SR4G, SR2G):
        src[tag] = collect(guided[tag], PRE, model=m3)
    m4, _ = _train(build_training_set(src, recipe("t4"), TOTAL, seed), seed)
    m5, _ = _train(build_training_set(src, recipe("t5"), TOTAL, seed), seed)
    return {"mix3": mix3, "t3": m3, "t3_cpu": cpu3, "t4": m4, "t5": m5}


def _spec(name, gripper, seed, sets=LEVELS):
    return ExperimentSpec(name, gripper, sets, 10, (seed,))


# --- 1 ----------------------------------------------------------------------------


def test_criterion_1_fcn_equivalence():
    t0 = time.perf_counter()
    worst_raw = worst_scaled = 0.0
    members = SOFT_TOYS_25.members + YCB_16.members
    for k in range(20):
        params = init_params(PRE.net, k)
        scene = place_randomly(members, BIN, 1 + k % 4, 1000 + k)
        img = render(scene, CAM)
        # raw image: cell (i, j) is the window with top-left pixel (8i, 8j)
        scores, stride, _ = dense_predict(params, img)
        n = PRE.net_input
        rr, cc = np.meshgrid(np.arange(scores.shape[0]), np.arange(scores.shape[1]), indexing="ij")
        patches = np.stack([img[i * stride : i * stride + n, j * stride : j * stride + n]
                            for i, j in zip(rr.ravel(), cc.ravel())])
        q = predict_q(params, patches).reshape(scores.shape)
        worst_raw = max(worst_raw, float(np.abs(q - scores).max()))
        # rescaled image, as the dense policy runs it, against crops taken from the original
        _, smap = dense_policy(params, img, CAM, PRE.crop, return_map=True)
        rows, cols = dense_grid(params, img.shape, PRE.crop)
        crops = np.stack([extract_patch(img, (int(c), int(r)), PRE.crop, n) for r in rows for c in cols])
        q2 = predict_q(params, crops).reshape(smap.shape)
        worst_scaled = max(worst_scaled, float(np.abs(q2 - smap).max()))
        assert params.dtype == np.float32 and forward(params, img[None]).dtype == np.float32
    dt = time.perf_counter() - t0
    ok = worst_raw <= 1e-5 and worst_scaled <= 1e-5 and dt < 60
    verdict(1, ok, f"20 scenes, max |dense - crop| raw {worst_raw:.2e}, rescaled {worst_scaled:.2e}, {dt:.1f}s")


# --- 2 ----------------------------------------------------------------------------


def test_criterion_2_gradients_and_mask():
    rng = np.random.default_rng(0)
    e64, e32 = [], []
    for seed in range(3):
        patch = rng.uniform(0, 1, (32, 32, 3)).astype(np.float32)
        p64 = init_params(PRE.net, seed, np.float64)
        p32 = init_params(PRE.net, seed, np.float32)
        e64.append(gradient_check(p64, (patch, seed * 5, seed % 2), epsilon=1e-5, n_weights=200, seed=seed)[0])
        e32.append(gradient_check(p32, (patch, seed * 5 + 1, 1 - seed % 2), epsilon=1e-3, n_weights=200,
                                  seed=seed)[0])
    kinds = {type(layer).__name__ for layer in PRE.net.layers}
    # the loss gradient reaches only the executed bin of each record
    logits = forward(init_params(PRE.net, 4), rng.uniform(0, 1, (8, 32, 32, 3)).astype(np.float32))
    bins = np.arange(8) * 2
    _, d = masked_loss(logits.reshape(8, -1), bins, np.arange(8) % 2)
    d = d.reshape(8, -1, 2)
    off = np.ones(d.shape[:2], bool)
    off[np.arange(8), bins] = False
    mask_ok = bool(np.all(d[off] == 0.0)) and bool(np.all(np.abs(d[~off]).sum(-1) > 0))
    ok = max(e64) < 1e-6 and max(e32) < 1e-3 and mask_ok and kinds == {"Conv", "MaxPool"}
    verdict(2, ok, f"float64 {max(e64):.2e}, float32 {max(e32):.2e}, layers {sorted(kinds)}, "
                   f"off-bin gradients zero: {mask_ok}")


# --- 3 and 4 ------------------------------------------------------------------------


def _grid_scenes():
    members = SOFT_TOYS_25.members + YCB_16.members
    return [place_randomly(members, BIN, 1 + k % 3, 2000 + k) for k in range(10)]


def test_criterion_3_oracle_equivalence():
    mismatches, cells, positives = 0, 0, 0
    for k, scene in enumerate(_grid_scenes()):
        for g in (GRIPPERS[k % 4], GRIPPERS[(k + 1) % 4]):
            ours = brute_force_success_map(scene, g, (21, 21), 18)
            ref = ReferenceOracle(scene, g).success_map((BIN.x0, BIN.y0, BIN.x1, BIN.y1), 21, 21, 18)
            mismatches += int((ours != ref).sum())
            cells += ours.size
            positives += int(ours.sum())
    verdict(3, mismatches == 0 and positives > 0,
            f"{mismatches} mismatching cells of {cells} over 10 scenes x 2 grippers ({positives} successes)")


def _outcome_grid(scene, g):
    """Outcome kind names on the 21x21x18 grid."""
    xs, ys = grid_centres((BIN.x0, BIN.y0, BIN.x1, BIN.y1), 21, 21)
    ev = GraspEvaluator(scene, g)
    kinds = np.empty((21, 21, 18), dtype=object)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            for b, phi in enumerate(bin_angles(18)):
                kinds[i, j, b] = ev.evaluate(GraspConfig(float(x), float(y), float(phi)))[0].kind.name
    return kinds


def test_criterion_4_taxonomy():
    estop_bad, superset_bad, phi_bad, finger_bad = 0, 0, 0, 0
    scenes = _grid_scenes()
    for scene in scenes:
        for g in GRIPPERS:
            kinds = _outcome_grid(scene, g)
            rigid_rigid = g.material.value == "rigid" and any(
                p.obj.material is Material.RIGID and p.obj.height > 25 for p in scene.objects)
            if not rigid_rigid:
                estop_bad += int((kinds == "EMERGENCY_STOP").sum())
        for n in (2, 4):
            soft = brute_force_success_map(scene, make_gripper(n, "soft"))
            rigid = brute_force_success_map(scene, make_gripper(n, "rigid"))
            superset_bad += int((rigid & ~soft).sum())
    for k, toy in enumerate(SOFT_TOYS_25.members[:10]):
        scene = place_randomly([toy], BIN, 1, 3000 + k)
        for g in GRIPPERS:
            m = brute_force_success_map(scene, g)
            phi_bad += int((m.any(-1) != m.all(-1)).sum())
    circles = [o for o in LEVEL1_8.members + LEVEL2_8.members if isinstance(o.shape, Circle)]
    for k, c in enumerate(circles):
        scene = place_randomly([c], BIN, 1, 4000 + k)
        for mat in ("rigid", "soft"):
            two = brute_force_success_map(scene, make_gripper(2, mat)).any(-1)
            four = brute_force_success_map(scene, make_gripper(4, mat)).any(-1)
            finger_bad += int((two & ~four).sum())
    ok = estop_bad == 0 and superset_bad == 0 and phi_bad == 0 and finger_bad == 0 and circles
    verdict(4, ok, f"(a) {estop_bad} stray e-stops, (b) {superset_bad} rigid-only successes, "
                   f"(c) {phi_bad} angle-dependent soft cells, (d) {finger_bad} two-finger-only cells "
                   f"on {len(circles)} circles")


# --- 5 ----------------------------------------------------------------------------


def test_criterion_5_mpph(tmp_path):
    exact = compute_mpph(0.5, 8, 10) == 100.0
    ks = published_mpph_constants()
    spread = (max(ks) - min(ks)) / min(ks)
    reps = [run_single_object_eval(_spec("h", make_gripper(4, "soft"), s), HeuristicPolicy()) for s in (0, 1)]
    reps.append(run_clutter_removal(OraclePolicy(make_gripper(4, "soft")), make_gripper(4, "soft"), 2, 20, 0))
    worst, rows = 0.0, 0
    for k, rep in enumerate(reps):
        d = emit_report(rep, tmp_path / f"r{k}")
        with open(d / "summary.csv") as fh:
            for row in csv.DictReader(fh):
                want = 3600 * float(row["success_rate"]) / (float(row["t_c"]) + float(row["t_e"]))
                worst = max(worst, abs(float(row["mpph"]) - want) / max(abs(want), 1.0))
                rows += 1
    ok = exact and worst <= 1e-9 and spread < 0.01
    verdict(5, ok, f"(0.5, 8, 10) -> 100.0: {exact}; {rows} rows, worst identity error {worst:.1e}; "
                   f"published constant {np.mean(ks):.1f} with spread {spread:.2%}")


# --- 6 ----------------------------------------------------------------------------


def test_criterion_6_end_to_end():
    g = make_gripper(2, "soft")
    lines, wins, cpu = [], 0, 0.0
    for seed in range(3):
        p = pipeline(seed)
        cpu = max(cpu, p["t3_cpu"])
        spec = _spec("e2e", g, seed, (LEVEL1_8.name,))
        dense = run_single_object_eval(spec, DensePolicy(p["t3"], PRE.crop)).overall.success_rate
        heur = run_single_object_eval(spec, HeuristicPolicy()).overall.success_rate
        win = dense >= heur + 0.10 and dense >= 0.80
        wins += win
        lines.append(f"seed {seed}: dense {dense:.3f} heuristic {heur:.3f}")
    ok = wins >= 2 and cpu < 1800
    verdict(6, ok, "; ".join(lines) + f"; {wins}/3 seeds meet both bounds; training {cpu:.0f}s CPU")


# --- 7 ----------------------------------------------------------------------------


def test_criterion_7_ablation():
    t0 = time.perf_counter()
    seeds = list(range(5))
    sources = {s: pipeline(s)["mix3"] for s in seeds}
    spec = ExperimentSpec("ablate", recipe("t3").test_gripper, LEVELS, 10, (0,))
    curve = run_ablation(None, [250, 500, 1000, 2000, 4000], seeds, spec, PRE, TRAIN, sources=sources)
    means = [c["mean"] for c in curve]
    rising = np.mean(means[-2:]) >= np.mean(means[:2])
    plateau = abs(means[-1] - means[-2]) <= 0.05
    dt = time.perf_counter() - t0
    ok = rising and plateau and dt < 7200
    shape = ", ".join(f"{c['size']}: {c['mean']:.3f}+-{c['sd']:.3f}" for c in curve)
    verdict(7, ok, f"{shape}; last two differ by {abs(means[-1] - means[-2]):.3f}; {dt:.0f}s")


# --- 8 ----------------------------------------------------------------------------


def test_criterion_8_transfer_ordering():
    power, precise = make_gripper(4, "soft"), make_gripper(2, "soft")
    wins, lines = 0, []
    for seed in range(5):
        p = pipeline(seed)
        sr = {
            "precise-power": run_single_object_eval(_spec("t5", power, seed), DensePolicy(p["t5"], PRE.crop)),
            "power-power": run_single_object_eval(_spec("t4", power, seed), DensePolicy(p["t4"], PRE.crop)),
            "precise-precise": run_single_object_eval(_spec("t7", precise, seed), DensePolicy(p["t5"], PRE.crop)),
        }
        sr = {k: v.overall.success_rate for k, v in sr.items()}
        best = sr["precise-power"] > max(sr["power-power"], sr["precise-precise"])
        wins += best
        lines.append(f"seed {seed}: " + " ".join(f"{k} {v:.3f}" for k, v in sr.items()))
    verdict(8, wins >= 3, "; ".join(lines) + f"; precise-power highest in {wins}/5")


# --- 9 ----------------------------------------------------------------------------


def test_criterion_9_dense_speedup():
    params = pipeline(0)["t3"]
    members = LEVEL1_8.members + LEVEL2_8.members
    td, ts = [], []
    for k in range(20):
        img = render(place_randomly(members, BIN, 3, 5000 + k), CAM)
        assert img.shape[:2] == (256, 256)
        t0 = time.perf_counter()
        dense_policy(params, img, CAM, PRE.crop)
        td.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        sampled_policy(params, img, CAM, 1000, k, PRE.crop)
        ts.append(time.perf_counter() - t0)
    d, s = float(np.median(td)), float(np.median(ts))
    verdict(9, d <= s / 10, f"median dense {d * 1e3:.1f} ms, sampled(1000) {s * 1e3:.1f} ms, ratio {s / d:.1f}x")


# --- 10 ---------------------------------------------------------------------------


def _identities(rep):
    for r in rep.rows:
        if not (r.attempts >= r.successes and r.failures == r.attempts - r.successes):
            return False
        if not math.isclose(r.mpph, 3600 * r.success_rate / (r.t_c + r.t_e), rel_tol=1e-9, abs_tol=1e-9):
            return False
    return True


def test_criterion_10_clutter():
    g = make_gripper(4, "soft")
    orc = run_clutter_removal(OraclePolicy(g), g, trials=5, budget=20, seed=0)
    trials = [r for r in orc.rows if r.kind == "trial"]
    oracle_ok = len(trials) == 5 and all(r.cleared and r.attempts == 10 == r.successes for r in trials)
    learned = run_clutter_removal(DensePolicy(pipeline(0)["t5"], PRE.crop), g, trials=5, budget=20, seed=0)
    lt = [r for r in learned.rows if r.kind == "trial"]
    ok = oracle_ok and len(lt) == 5 and _identities(orc) and _identities(learned)
    verdict(10, ok, f"oracle attempts {[r.attempts for r in trials]}; trained policy "
                    f"{learned.overall.successes}/{learned.overall.attempts} over 5 trials, identities hold: "
                    f"{_identities(learned)}")
