#!/usr/bin/env python3
"""Generate the bundled demonstration files.

Synthesizes paired arm recordings for the three dynamic primitives at a
camera-tracker-ish 120 Hz with measurement noise, plus clean single-stream
demos used by tests and examples.  Deterministic: fixed seed, fixed grids.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from predress.dmp import Demonstration
from predress.io import write_demo, write_pair_demo
from predress.quat import quat_exp

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "predress", "data", "demos")

RATE = 120.0
POS_NOISE = 8e-4
ANG_NOISE = 5e-4
SEED = 20240811


def mj(t, t0, t1, a, b):
    u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    return a + (b - a) * (10 * u**3 - 15 * u**4 + 6 * u**5)


def window(t, tau):
    return np.sin(np.pi * t / tau) ** 2


def quats_from_rotvecs(vecs):
    return np.array([quat_exp(v) for v in vecs])


def make_fling(rng):
    tau = 1.4
    t = np.arange(int(round(tau * RATE)) + 1) / RATE
    n = len(t)

    def arm(x, y_off):
        pos = np.column_stack(
            [
                x,
                np.full(n, y_off),
                mj(t, 0.05, 0.55, 0.38, 0.78) + mj(t, 0.60, 1.10, 0.0, -0.38),
            ]
        )
        pos += rng.normal(0.0, POS_NOISE, size=pos.shape)
        theta = mj(t, 0.30, 1.20, 0.0, 1.1)
        rv = np.column_stack(
            [
                rng.normal(0.0, ANG_NOISE, size=n),
                theta,
                rng.normal(0.0, ANG_NOISE, size=n),
            ]
        )
        return pos, quats_from_rotvecs(rv)

    # the left arm leads slightly, so the separation swells mid-motion
    lp, lq = arm(mj(t, 0.00, 1.26, 0.15, 0.65), +0.25)
    rp, rq = arm(mj(t, 0.14, 1.40, 0.15, 0.65), -0.25)
    left = Demonstration(t=t, channels=lp, labels=("x", "y", "z"), rate_hz=RATE, quats=lq)
    right = Demonstration(t=t, channels=rp, labels=("x", "y", "z"), rate_hz=RATE, quats=rq)
    return left, right


def make_shake(rng):
    tau = 2.0
    t = np.arange(int(round(tau * RATE)) + 1) / RATE
    n = len(t)
    win = window(t, tau)
    osc = win * np.sin(2 * np.pi * 1.5 * t)

    def arm(y_off):
        pos = np.column_stack(
            [
                mj(t, 0.0, tau, 0.35, 0.40) + 0.10 * osc,
                np.full(n, y_off),
                np.full(n, 0.55),
            ]
        )
        pos += rng.normal(0.0, POS_NOISE, size=pos.shape)
        theta = mj(t, 0.0, tau, 0.0, 0.15) + 0.25 * win * np.sin(2 * np.pi * 1.5 * t + 0.5)
        rv = np.column_stack(
            [
                rng.normal(0.0, ANG_NOISE, size=n),
                theta,
                rng.normal(0.0, ANG_NOISE, size=n),
            ]
        )
        return pos, quats_from_rotvecs(rv)

    lp, lq = arm(+0.25)
    rp, rq = arm(-0.25)
    left = Demonstration(t=t, channels=lp, labels=("x", "y", "z"), rate_hz=RATE, quats=lq)
    right = Demonstration(t=t, channels=rp, labels=("x", "y", "z"), rate_hz=RATE, quats=rq)
    return left, right


def make_twist(rng):
    tau = 2.4
    t = np.arange(int(round(tau * RATE)) + 1) / RATE
    n = len(t)
    push = mj(t, 0.10, 1.00, 0.20, 0.45) + mj(t, 1.30, 2.20, 0.0, 0.25)

    def arm(y_off, sign):
        pos = np.column_stack([push.copy(), np.full(n, y_off), np.full(n, 0.50)])
        pos += rng.normal(0.0, POS_NOISE, size=pos.shape)
        theta = sign * (mj(t, 0.15, 1.05, 0.0, 0.9) + mj(t, 1.35, 2.25, 0.0, 0.5))
        rv = np.column_stack(
            [
                rng.normal(0.0, ANG_NOISE, size=n),
                rng.normal(0.0, ANG_NOISE, size=n),
                theta,
            ]
        )
        return pos, quats_from_rotvecs(rv)

    lp, lq = arm(+0.25, +1.0)
    rp, rq = arm(-0.25, -1.0)
    left = Demonstration(t=t, channels=lp, labels=("x", "y", "z"), rate_hz=RATE, quats=lq)
    right = Demonstration(t=t, channels=rp, labels=("x", "y", "z"), rate_hz=RATE, quats=rq)
    return left, right


def make_generic():
    out = {}
    rate = 500.0

    tau = 1.5
    t = np.arange(int(round(tau * rate)) + 1) / rate
    out["constant"] = Demonstration(
        t=t,
        channels=np.tile([0.4, -0.1, 0.55], (len(t), 1)),
        labels=("x", "y", "z"),
        rate_hz=rate,
    )
    out["minjerk"] = Demonstration(
        t=t,
        channels=np.column_stack([mj(t, 0.0, tau, 0.0, 0.8), mj(t, 0.0, tau, 0.2, -0.4)]),
        labels=("a", "b"),
        rate_hz=rate,
    )

    tau = 2.0
    t = np.arange(int(round(tau * rate)) + 1) / rate
    y = mj(t, 0.0, tau, 0.0, 0.25) + 0.1 * window(t, tau) * np.sin(2 * np.pi * 1.2 * t)
    out["sine"] = Demonstration(t=t, channels=y[:, None], labels=("a",), rate_hz=rate)
    return out


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = np.random.default_rng(SEED)
    for name, maker in (("fling", make_fling), ("shake", make_shake), ("twist", make_twist)):
        left, right = maker(rng)
        path = os.path.join(OUT, name + ".ndjson")
        write_pair_demo(path, left, right)
        print("wrote %s (%d samples)" % (path, len(left)))
    for name, demo in make_generic().items():
        path = os.path.join(OUT, name + ".ndjson")
        write_demo(path, demo)
        print("wrote %s (%d samples)" % (path, len(demo)))


if __name__ == "__main__":
    main()
