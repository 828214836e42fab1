"""Compare the compiled and NumPy geometry kernels on identical inputs.

    python3 benchmarks/bench_kernels.py --repeat 2000
    python3 benchmarks/bench_kernels.py --map   # also time a full success map per backend

Each kernel is checked for agreement before it is timed.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from grasplab.kernels import backends


def _polygon(rng, n=12, r=40.0):
    a = np.sort(rng.uniform(0, 2 * np.pi, n))
    return np.ascontiguousarray(np.column_stack([r * np.cos(a), r * np.sin(a)]))


def cases(rng):
    p = _polygon(rng)
    q = _polygon(rng) + 15.0
    xs = rng.uniform(-60, 60, 500)
    ys = rng.uniform(-60, 60, 500)
    return {
        "strip_interval": lambda k: k.strip_interval(p, 3.0, -2.0, 0.6, 0.8, -10.0, 10.0),
        "sweep_extents": lambda k: k.sweep_extents(p, 1.0, 2.0, 40.0, 180),
        "poly_distance": lambda k: k.poly_distance(p, 70.0, 10.0),
        "points_in_poly": lambda k: k.points_in_poly(p, xs, ys),
        "convex_intersection_area": lambda k: k.convex_intersection_area(p, q),
    }


def _same(a, b):
    if a is None or b is None:
        return a is b
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-9, atol=1e-9)


def time_call(fn, repeat):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def map_timing(backend):
    """Seconds for one 21x21x18 success map, measured in a fresh interpreter."""
    code = (
        "import time;from grasplab.presets import LEVEL1_8;from grasplab.scene import place_randomly, Workspace;"
        "from grasplab.gripper import make_gripper;from grasplab.oracle import brute_force_success_map;"
        "s=place_randomly(LEVEL1_8.members, Workspace(0,0,400,400), 3, 1);g=make_gripper(4,'soft');"
        "brute_force_success_map(s,g);t=time.perf_counter();brute_force_success_map(s,g);"
        "print(time.perf_counter()-t)"
    )
    env = dict(os.environ, GRASPLAB_PURE_PYTHON="1" if backend == "python" else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--map", action="store_true", help="time brute_force_success_map per backend")
    args = ap.parse_args(argv)

    found = backends()
    if "cython" not in found:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    py, cy = found["python"], found["cython"]
    work = cases(np.random.default_rng(args.seed))

    print(f"{'kernel':<26}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, fn in work.items():
        if not _same(fn(py), fn(cy)):
            print(f"{name}: backends disagree")
            return 2
        tp = time_call(lambda: fn(py), args.repeat)
        tc = time_call(lambda: fn(cy), args.repeat)
        print(f"{name:<26}{tp * 1e6:>12.2f}{tc * 1e6:>12.2f}{tp / tc:>9.1f}x")

    if args.map:
        tp, tc = map_timing("python"), map_timing("cython")
        print(f"{'success map 21x21x18':<26}{tp * 1e3:>10.1f}ms{tc * 1e3:>10.1f}ms{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
