"""Named motion primitives and the on-disk registry.

A registry directory holds one subdirectory per primitive with a meta.json
describing it: dynamic primitives reference fitted left/right models, the
quasi-static reach is described in closed form.  Every meta carries the
separation cap and a pointer to the kinematic limits file it was validated
against.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .bimanual import PairTrajectory, constant_orientation, min_jerk_profile, pair_rollout
from .dmp import ALPHA_S, DEFAULT_DT, Trajectory, check_limits, rollout
from .errors import LimitViolation, RegistryError
from .io import load_limits, load_model, save_model
from .quat import rotation_accumulation

AXES = ("X", "Y", "Z")
DYNAMIC = "dynamic"
QUASI_STATIC = "quasi_static"
AXIS_DOMINANCE = 0.5


@dataclass
class QuasiParams:
    start_left: np.ndarray
    start_right: np.ndarray
    direction: np.ndarray
    forward_distance: float
    duration: float
    orientation_left: np.ndarray
    orientation_right: np.ndarray


@dataclass
class PrimitiveSpec:
    name: str
    kind: str
    main_rotation_axis: str
    d_max: float
    limits: object
    left: object = None
    right: object = None
    quasi: QuasiParams = None


@dataclass(frozen=True)
class IterationPlan:
    """An ordered tuple of primitive names executed once per iteration."""

    steps: tuple

    @property
    def label(self):
        return "+".join(self.steps)


def _vec(obj, key, n, where):
    try:
        v = np.array(obj[key], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise RegistryError("%s: bad %r" % (where, key)) from exc
    if v.shape != (n,):
        raise RegistryError("%s: %r must have %d entries" % (where, key, n))
    return v


def axis_fraction(spec, dt=0.004):
    """Share of total rotation that happens about the declared axis.

    Replays both orientation tracks (no limits) and accumulates per-axis
    rotation-vector increments; invariant to how the path is sampled.
    """
    idx = AXES.index(spec.main_rotation_axis)
    total = np.zeros(3)
    for model in (spec.left, spec.right):
        traj = rollout(model, dt=dt)
        total += rotation_accumulation(traj.quats)
    denom = float(total.sum())
    if denom <= 0.0:
        raise RegistryError("%s: no rotation found on either arm" % spec.name)
    return float(total[idx] / denom)


def _validate_spec(spec):
    if spec.d_max <= 0:
        raise RegistryError("%s: d_max must be positive" % spec.name)
    if spec.limits.n_channels != 3:
        raise RegistryError("%s: limits must cover 3 channels" % spec.name)
    if spec.kind == DYNAMIC:
        for side, model in (("left", spec.left), ("right", spec.right)):
            if model is None:
                raise RegistryError("%s: missing %s model" % (spec.name, side))
            if model.n_channels != 3:
                raise RegistryError("%s: %s model must have 3 channels" % (spec.name, side))
            if not model.has_orientation:
                raise RegistryError(
                    "%s: %s model carries no orientation track" % (spec.name, side)
                )
        if spec.main_rotation_axis not in AXES:
            raise RegistryError("%s: main_rotation_axis must be one of X, Y, Z" % spec.name)
        frac = axis_fraction(spec)
        if frac < AXIS_DOMINANCE:
            raise RegistryError(
                "%s: declared axis %s carries only %.0f%% of the rotation"
                % (spec.name, spec.main_rotation_axis, 100 * frac)
            )
    elif spec.kind == QUASI_STATIC:
        q = spec.quasi
        if q is None:
            raise RegistryError("%s: missing quasi-static parameters" % spec.name)
        if q.duration <= 0 or q.forward_distance < 0:
            raise RegistryError("%s: bad quasi-static duration or distance" % spec.name)
        sep = float(np.linalg.norm(q.start_left - q.start_right))
        if sep > spec.d_max + 1e-9:
            raise RegistryError(
                "%s: start separation %.4f exceeds d_max %.4f" % (spec.name, sep, spec.d_max)
            )
    else:
        raise RegistryError("%s: unknown kind %r" % (spec.name, spec.kind))


def load_primitive(name, registry_dir):
    root = registry_dir
    pdir = os.path.join(root, name)
    meta_path = os.path.join(pdir, "meta.json")
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise RegistryError("no primitive %r under %s" % (name, root)) from None
    except json.JSONDecodeError as exc:
        raise RegistryError("%s: %s" % (meta_path, exc)) from exc

    kind = meta.get("kind")
    limits_ref = meta.get("limits")
    if not isinstance(limits_ref, str):
        raise RegistryError("%s: meta must reference a limits file" % meta_path)
    limits = load_limits(os.path.normpath(os.path.join(pdir, limits_ref)))
    try:
        d_max = float(meta["d_max"])
    except (KeyError, TypeError, ValueError) as exc:
        raise RegistryError("%s: bad d_max" % meta_path) from exc

    left = right = None
    quasi = None
    if kind == DYNAMIC:
        models = meta.get("models") or {}
        for side in ("left", "right"):
            ref = models.get(side)
            if not isinstance(ref, str):
                raise RegistryError("%s: missing %s model reference" % (meta_path, side))
            model = load_model(os.path.normpath(os.path.join(pdir, ref)))
            if side == "left":
                left = model
            else:
                right = model
    elif kind == QUASI_STATIC:
        q = meta.get("quasi")
        if not isinstance(q, dict):
            raise RegistryError("%s: missing quasi block" % meta_path)
        quasi = QuasiParams(
            start_left=_vec(q, "start_left", 3, meta_path),
            start_right=_vec(q, "start_right", 3, meta_path),
            direction=_vec(q, "direction", 3, meta_path),
            forward_distance=float(q.get("forward_distance", 0.0)),
            duration=float(q.get("duration", 0.0)),
            orientation_left=_vec(q, "orientation_left", 4, meta_path),
            orientation_right=_vec(q, "orientation_right", 4, meta_path),
        )

    spec = PrimitiveSpec(
        name=str(meta.get("name", name)),
        kind=kind,
        main_rotation_axis=meta.get("main_rotation_axis"),
        d_max=d_max,
        limits=limits,
        left=left,
        right=right,
        quasi=quasi,
    )
    if spec.name != name:
        raise RegistryError("%s: meta name %r does not match directory" % (meta_path, spec.name))
    _validate_spec(spec)
    return spec


class Registry:
    """All primitives below one directory, loaded and validated."""

    def __init__(self, root, specs):
        self.root = root
        self.specs = specs

    def __contains__(self, name):
        return name in self.specs

    def names(self):
        return sorted(self.specs)

    def get(self, name):
        try:
            return self.specs[name]
        except KeyError:
            raise RegistryError(
                "unknown primitive %r; registry has %s" % (name, ", ".join(self.names()))
            ) from None


def load_registry(root):
    if not os.path.isdir(root):
        raise RegistryError("registry directory %s does not exist" % root)
    specs = {}
    for entry in sorted(os.listdir(root)):
        pdir = os.path.join(root, entry)
        if os.path.isdir(pdir) and os.path.exists(os.path.join(pdir, "meta.json")):
            specs[entry] = load_primitive(entry, root)
    if not specs:
        raise RegistryError("no primitives found under %s" % root)
    return Registry(root, specs)


def save_primitive(root, name, left_model, right_model, *, kind=DYNAMIC,
                   main_rotation_axis=None, d_max=None, limits_ref="../limits.json",
                   quasi=None):
    """Write one primitive directory; returns its meta path."""
    pdir = os.path.join(root, name)
    os.makedirs(pdir, exist_ok=True)
    meta = {
        "name": name,
        "kind": kind,
        "main_rotation_axis": main_rotation_axis,
        "d_max": d_max,
        "limits": limits_ref,
    }
    if kind == DYNAMIC:
        save_model(os.path.join(pdir, "left.json"), left_model)
        save_model(os.path.join(pdir, "right.json"), right_model)
        meta["models"] = {"left": "left.json", "right": "right.json"}
    else:
        meta["quasi"] = quasi
    meta_path = os.path.join(pdir, "meta.json")
    with open(meta_path, "w") as fh:
        fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return meta_path


def build_quasi_static(params, d_max, dt=DEFAULT_DT):
    """Closed-form slow forward reach holding separation and orientation."""
    q = params
    n = int(round(q.duration / dt)) + 1
    t = np.arange(n) * dt
    dirv = np.asarray(q.direction, dtype=float)
    norm = np.linalg.norm(dirv)
    if norm <= 0:
        raise RegistryError("quasi-static direction must be nonzero")
    dirv = dirv / norm
    pos, vel, acc = min_jerk_profile(0.0, q.forward_distance, q.duration, t)
    phase = np.exp(-ALPHA_S * t / q.duration)

    def _arm(start, quat):
        return Trajectory(
            t=t,
            y=start[None, :] + pos[:, None] * dirv[None, :],
            v=vel[:, None] * dirv[None, :],
            a=acc[:, None] * dirv[None, :],
            phase=phase,
            labels=("x", "y", "z"),
            dt=float(dt),
            quats=constant_orientation(n, quat),
        )

    pair = PairTrajectory(
        t=t,
        phase=phase,
        left=_arm(np.asarray(q.start_left, dtype=float), q.orientation_left),
        right=_arm(np.asarray(q.start_right, dtype=float), q.orientation_right),
        d_max=float(d_max),
    )
    if pair.max_separation() > d_max + 1e-9:
        raise LimitViolation("quasi-static reach exceeds the separation cap")
    return pair


def generate(spec, dt=DEFAULT_DT, limits=None):
    """Produce the paired trajectory for one primitive, constraints applied."""
    limits = spec.limits if limits is None else limits
    if spec.kind == QUASI_STATIC:
        pair = build_quasi_static(spec.quasi, spec.d_max, dt=dt)
        check_limits(pair.left, limits)
        check_limits(pair.right, limits)
        return pair
    return pair_rollout(spec.left, spec.right, limits=limits, d_max=spec.d_max, dt=dt)


def compose(names, registry):
    """Build an iteration plan from primitive names, validating membership."""
    steps = tuple(names)
    if not steps:
        raise RegistryError("a plan needs at least one primitive")
    for name in steps:
        registry.get(name)
    return IterationPlan(steps=steps)
