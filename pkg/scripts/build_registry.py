#!/usr/bin/env python3
"""Build the bundled primitive registry from the bundled demonstrations.

Preprocesses each paired demo, fits left/right models, and writes the
registry directory including the shared limits file and the closed-form
quasi-static reach.  Deterministic given the demo files.
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from predress.dmp import KinematicLimits, PreprocessSpec, fit, resample_and_filter
from predress.io import read_pair_demo, save_limits
from predress.primitives import load_registry, save_primitive

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "predress", "data")

TARGET_RATE = 500.0
CUTOFF = 8.0
N_BASIS = 30

# which channels carry the motion that matters, per primitive
PRIMITIVES = {
    "Fling": {"demo": "fling", "axis": "Y", "essential": [True, False, True]},
    "Shake": {"demo": "shake", "axis": "Y", "essential": [True, False, False]},
    "Twist": {"demo": "twist", "axis": "Z", "essential": [True, False, False]},
}

D_MAX = 0.6

QUASI = {
    "start_left": [0.65, 0.25, 0.45],
    "start_right": [0.65, -0.25, 0.45],
    "direction": [1.0, 0.0, 0.0],
    "forward_distance": 0.3,
    "duration": 4.0,
    "orientation_left": [1.0, 0.0, 0.0, 0.0],
    "orientation_right": [1.0, 0.0, 0.0, 0.0],
}


def task_space_limits():
    return KinematicLimits(
        pos_lo=np.array([-0.2, -0.9, -0.1]),
        pos_hi=np.array([1.2, 0.9, 1.3]),
        vel_max=np.array([2.5, 2.5, 2.5]),
        acc_max=np.array([25.0, 25.0, 25.0]),
        safety_scale=0.98,
    )


def main():
    registry = os.path.join(DATA, "registry")
    os.makedirs(registry, exist_ok=True)
    limits = task_space_limits()
    save_limits(os.path.join(registry, "limits.json"), limits)
    save_limits(os.path.join(DATA, "limits", "task_space.json"), limits)

    for name, info in PRIMITIVES.items():
        demo_path = os.path.join(DATA, "demos", info["demo"] + ".ndjson")
        left_raw, right_raw = read_pair_demo(demo_path)
        spec = PreprocessSpec(TARGET_RATE, CUTOFF, info["essential"])
        left = resample_and_filter(left_raw, spec)
        right = resample_and_filter(right_raw, spec)
        lm = fit(left, n_basis=N_BASIS)
        rm = fit(right, n_basis=N_BASIS)
        save_primitive(
            registry,
            name,
            lm,
            rm,
            main_rotation_axis=info["axis"],
            d_max=D_MAX,
            limits_ref="../limits.json",
        )
        print("fit %s from %s (%d samples)" % (name, demo_path, len(left)))

    save_primitive(
        registry,
        "QuasiStatic",
        None,
        None,
        kind="quasi_static",
        d_max=D_MAX,
        limits_ref="../limits.json",
        quasi=QUASI,
    )
    print("wrote QuasiStatic")

    reg = load_registry(registry)
    print("registry validates: %s" % ", ".join(reg.names()))


if __name__ == "__main__":
    main()
