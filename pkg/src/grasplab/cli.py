"""Command-line entry point: ``grasplab <command> [options]``.

Exit status is 0 on success, 2 on a configuration error and 3 on an I/O or
file-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .collect import CollectConfig, collect, load_dataset, merge_shards, mix, save_dataset
from .config import get_preset, thread_cap
from .errors import (
    ChecksumMismatch,
    ConfigError,
    InsufficientSource,
    ManifestMismatch,
    ModelLoadError,
    VersionMismatch,
)
from .gripper import make_gripper
from .learn import TrainConfig, load_model, model_hash, save_model, write_loss_csv
from .policy import DensePolicy, HeuristicPolicy, OraclePolicy, RandomPolicy, SampledPolicy

log = logging.getLogger("grasplab")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
IO_ERRORS = (OSError, ModelLoadError, ChecksumMismatch, VersionMismatch, ManifestMismatch)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _gripper(text):
    """``4-soft`` or ``2-rigid``."""
    try:
        n, mat = text.split("-")
        return make_gripper(int(n), mat)
    except ValueError:
        raise ConfigError(f"gripper must look like '4-soft' or '2-rigid', got {text!r}") from None


def _out(args, *parts):
    d = Path(args.out_dir, *parts)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_sources(paths):
    """Datasets keyed by their manifest name."""
    out = {}
    for p in paths:
        ds = load_dataset(p)
        out[ds.manifest.get("name", Path(p).name)] = ds
    return out


def _policy(args, preset):
    kind = args.policy
    if kind in ("dense", "sampled"):
        if not args.model:
            raise ConfigError(f"policy {kind!r} needs --model")
        params = load_model(args.model)
        pol = DensePolicy(params, preset.crop) if kind == "dense" else SampledPolicy(params, preset.crop, args.samples)
        return pol, model_hash(params)
    if kind == "heuristic":
        return HeuristicPolicy(), None
    if kind == "random":
        return RandomPolicy(), None
    raise ConfigError(f"unknown policy {kind!r}")


def cmd_collect(args, preset):
    with open(args.config) as fh:
        raw = json.load(fh)
    raw.setdefault("seed", args.seed)
    cfg = CollectConfig.from_dict(raw)
    if args.shards > 1:
        n = cfg.n_attempts
        bounds = [n * k // args.shards for k in range(args.shards + 1)]
        ds = merge_shards([collect(cfg, preset, attempts=range(a, b)) for a, b in zip(bounds, bounds[1:])])
    else:
        ds = collect(cfg, preset)
    d = save_dataset(ds, _out(args, cfg.tag))
    print(f"{cfg.tag}: {len(ds)} records, {ds.success_count} successes, "
          f"{ds.manifest.get('estop_count', 0)} e-stops -> {d}")


def cmd_train(args, preset):
    sources = _load_sources(args.dataset)
    if args.test:
        ds = bench.build_training_set(sources, bench.recipe(args.test), args.total, args.seed)
    elif len(sources) == 1:
        ds = next(iter(sources.values()))
    else:
        names = sorted(sources)
        ds = mix([sources[k] for k in names], [1.0] * len(names), args.total, args.seed)
    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
                      augment=args.augment)
    params, hist = bench.train_on(ds, preset, cfg)
    params.meta.update({"train": cfg.to_dict(), "records": len(ds)})
    save_model(params, args.out)
    write_loss_csv(hist, Path(args.out).with_suffix(".loss.csv"))
    last = hist[-1]
    print(f"trained on {len(ds)} records: loss {last.mean_loss:.4f}, train accuracy {last.train_accuracy:.3f}"
          f" -> {args.out}")


def _print_rows(rep):
    for r in rep.rows:
        if r.kind != "object" and r.kind != "trial":
            print(f"{r.name:>12}: {r.successes}/{r.attempts} = {r.success_rate:.3f}  "
                  f"t_c {r.t_c:.4f}s  mpph {r.mpph:.1f}")


def cmd_eval(args, preset):
    spec = bench.spec_for(args.test, attempts_per_object=args.attempts, seeds=tuple(args.seeds or [args.seed]),
                          t_e=args.t_e)
    pol, mh = _policy(args, preset)
    rep = bench.run_single_object_eval(spec, pol, preset, model_hash_=mh)
    d = bench.emit_report(rep, _out(args, f"eval-{args.test}-{pol.name}"))
    _print_rows(rep)
    print(f"report -> {d}")


def cmd_baseline(args, preset):
    spec = bench.spec_for(args.test, attempts_per_object=args.attempts, seeds=tuple(args.seeds or [args.seed]),
                          t_e=args.t_e)
    for pol in (HeuristicPolicy(), RandomPolicy()):
        rep = bench.run_single_object_eval(spec, pol, preset)
        d = bench.emit_report(rep, _out(args, f"baseline-{args.test}-{pol.name}"))
        print(f"[{pol.name}]")
        _print_rows(rep)
        print(f"report -> {d}")


def cmd_ablate(args, preset):
    sources = _load_sources(args.dataset)
    r = bench.recipe(args.test)
    mixed = bench.build_training_set(sources, r, max(args.sizes), args.seed)
    spec = bench.spec_for(args.test, attempts_per_object=args.attempts, t_e=args.t_e)
    seeds = args.seeds or [args.seed]
    cfg = TrainConfig(epochs=args.epochs, augment=args.augment)
    curve = bench.run_ablation(mixed, args.sizes, seeds, spec, preset, cfg, workers=thread_cap())
    d = _out(args, f"ablate-{args.test}")
    (d / "curve.json").write_text(json.dumps(curve, indent=1))
    with open(d / "curve.csv", "w") as fh:
        fh.write("size,mean,sd\n")
        for c in curve:
            fh.write(f"{c['size']},{c['mean']!r},{c['sd']!r}\n")
    for c in curve:
        print(f"{c['size']:>6}: {c['mean']:.3f} +- {c['sd']:.3f}")
    print(f"curve -> {d}")


def cmd_clutter(args, preset):
    gripper = _gripper(args.gripper)
    if args.policy == "oracle":
        pol, mh = OraclePolicy(gripper), None
    else:
        pol, mh = _policy(args, preset)
    rep = bench.run_clutter_removal(pol, gripper, args.trials, args.budget, args.seed, args.t_e, preset,
                                    model_hash_=mh)
    d = bench.emit_report(rep, _out(args, f"clutter-{pol.name}"))
    for r in rep.rows:
        extra = "" if r.cleared is None else f"  cleared={r.cleared}"
        print(f"{r.name:>8}: {r.successes}/{r.attempts}  mpph {r.mpph:.1f}{extra}")
    print(f"report -> {d}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default="runs")
    common.add_argument("--preset", choices=["desk", "paper"], default="desk")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="grasplab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("collect", parents=[common], help="collect labelled grasp attempts")
    c.add_argument("--config", required=True, help="JSON collection config")
    c.add_argument("--shards", type=int, default=1)
    c.set_defaults(func=cmd_collect)

    def evaluation(sp):
        sp.add_argument("--test", default="t4", help="named recipe t1..t7")
        sp.add_argument("--attempts", type=int, default=10, help="attempts per object")
        sp.add_argument("--seeds", type=_int_list, default=None)
        sp.add_argument("--t-e", dest="t_e", type=float, default=bench.DEFAULT_TE)

    t = sub.add_parser("train", parents=[common], help="train a model on one or more datasets")
    t.add_argument("--dataset", nargs="+", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--test", default=None, help="mix datasets by this recipe")
    t.add_argument("--total", type=int, default=4000)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--augment", action="store_true", help="add mirrored patches")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="single-object robustness test")
    e.add_argument("--model")
    e.add_argument("--policy", default="dense", choices=["dense", "sampled", "heuristic", "random"])
    e.add_argument("--samples", type=int, default=1000)
    evaluation(e)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("baseline", parents=[common], help="heuristic and random baselines")
    evaluation(b)
    b.set_defaults(func=cmd_baseline)

    a = sub.add_parser("ablate", parents=[common], help="data-size ablation")
    a.add_argument("--dataset", nargs="+", required=True)
    a.add_argument("--sizes", type=_int_list, default=[250, 500, 1000, 2000, 4000])
    a.add_argument("--epochs", type=int, default=20)
    a.add_argument("--augment", action="store_true")
    evaluation(a)
    a.set_defaults(func=cmd_ablate, test="t3")

    k = sub.add_parser("clutter", parents=[common], help="clutter removal task")
    k.add_argument("--model")
    k.add_argument("--policy", default="dense", choices=["dense", "sampled", "heuristic", "random", "oracle"])
    k.add_argument("--samples", type=int, default=1000)
    k.add_argument("--gripper", default="4-soft")
    k.add_argument("--trials", type=int, default=5)
    k.add_argument("--budget", type=int, default=20)
    k.add_argument("--t-e", dest="t_e", type=float, default=bench.DEFAULT_TE)
    k.set_defaults(func=cmd_clutter)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        thread_cap()
        preset = get_preset(args.preset)
        args.func(args, preset)
    except (ConfigError, InsufficientSource, json.JSONDecodeError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IO_ERRORS as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
