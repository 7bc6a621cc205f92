#!/usr/bin/env python3
"""Benchmark the compiled rollout stepper against the pure-Python fallback.

Runs each workload in two fresh subprocesses -- one with the compiled
extension, one with PREDRESS_PURE_KERNEL=1 -- so import-time backend
selection stays untouched.  Besides wall time, every workload publishes a
digest of its output arrays; the two backends must agree bit for bit.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--episodes N]
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

HERE = os.path.dirname(os.path.abspath(__file__))


def _digest(*arrays):
    h = hashlib.sha256()
    for arr in arrays:
        h.update(arr.tobytes())
    return h.hexdigest()[:16]


def _workloads(episodes):
    """Build (name, callable) pairs; each callable returns (label, digest)."""
    import numpy as np

    from predress.dmp import DEFAULT_DT, KinematicLimits, fit, rollout
    from predress.episodes import load_config, run_batch, report_to_json
    from predress.io import read_demo
    from predress.primitives import generate, load_registry

    data = os.path.join(HERE, "..", "src", "predress", "data")
    minjerk = read_demo(os.path.join(data, "demos", "minjerk.ndjson"))
    sine = read_demo(os.path.join(data, "demos", "sine.ndjson"))
    registry = load_registry(os.path.join(data, "registry"))
    cfg = load_config(os.path.join(data, "configs", "experiments.json"))
    cfg.n_episodes = episodes

    model_mj = fit(minjerk, n_basis=30)
    model_sine = fit(sine, n_basis=30)
    n = minjerk.channels.shape[1]
    d_vel = np.gradient(minjerk.channels, minjerk.t, axis=0)
    demo_peak = float(np.abs(np.gradient(d_vel, minjerk.t, axis=0)).max())
    tight = KinematicLimits(
        pos_lo=np.full(n, -10.0), pos_hi=np.full(n, 10.0),
        vel_max=np.full(n, 50.0), acc_max=np.full(n, 0.5 * demo_peak),
    )

    def single_free():
        traj = rollout(model_sine, dt=DEFAULT_DT)
        return _digest(traj.y, traj.v, traj.a, traj.phase)

    def single_clamped():
        traj = rollout(model_mj, dt=DEFAULT_DT, limits=tight)
        return _digest(traj.y, traj.v, traj.a, traj.phase)

    def registry_pairs():
        arrays = []
        for name in registry.names():
            pair = generate(registry.get(name))
            arrays += [pair.left.y, pair.right.y, pair.phase]
        return _digest(*arrays)

    def simulated_batch():
        report = run_batch(cfg)
        return hashlib.sha256(report_to_json(report).encode()).hexdigest()[:16]

    return [
        ("single rollout, free (sine)", single_free),
        ("single rollout, acc-clamped (minjerk)", single_clamped),
        ("registry pair rollouts (x4)", registry_pairs),
        ("simulated batch, 13 x %d episodes" % episodes, simulated_batch),
    ]


def run_child(repeat, episodes):
    from predress._kernels import backend_name

    results = []
    for name, fn in _workloads(episodes):
        digest = fn()  # warm-up; also the parity digest
        best = min(_timed(fn) for _ in range(repeat))
        results.append({"name": name, "best_s": best, "digest": digest})
    json.dump({"backend": backend_name(), "results": results}, sys.stdout)
    sys.stdout.write("\n")


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def spawn(force_pure, repeat, episodes):
    env = dict(os.environ)
    env.pop("PREDRESS_PURE_KERNEL", None)
    if force_pure:
        env["PREDRESS_PURE_KERNEL"] = "1"
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--child",
         "--repeat", str(repeat), "--episodes", str(episodes)],
        env=env, check=True, capture_output=True, text=True,
    )
    return json.loads(out.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timed repetitions per workload (best is kept)")
    parser.add_argument("--episodes", type=int, default=500,
                        help="episodes per pair in the batch workload")
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.child:
        run_child(args.repeat, args.episodes)
        return 0

    compiled = spawn(False, args.repeat, args.episodes)
    pure = spawn(True, args.repeat, args.episodes)
    if compiled["backend"] != "compiled":
        print("warning: compiled extension unavailable; comparing pure vs pure",
              file=sys.stderr)

    width = max(len(r["name"]) for r in pure["results"])
    print("%-*s  %12s  %12s  %8s  %s" % (width, "workload",
                                         compiled["backend"], "pure", "speedup", "parity"))
    ok = True
    for c_row, p_row in zip(compiled["results"], pure["results"]):
        same = c_row["digest"] == p_row["digest"]
        ok = ok and same
        print("%-*s  %10.3f ms  %10.3f ms  %7.1fx  %s" % (
            width, c_row["name"], 1e3 * c_row["best_s"], 1e3 * p_row["best_s"],
            p_row["best_s"] / c_row["best_s"], "bitwise" if same else "DIFFERS"))
    if not ok:
        print("error: backends disagree", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
