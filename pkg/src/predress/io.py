"""File formats: demonstration streams, model/limit files, CSV exports.

Demonstrations travel as newline-delimited JSON: one header object with
"labels" and "rate_hz", then one object per sample.  Single-stream records
carry {"t", "y": [...]} while paired records carry {"t", "left": {"p", "q"},
"right": {"p", "q"}}.
"""

import csv
import json

import numpy as np

from .dmp import Demonstration, DMPModel, KinematicLimits
from .errors import CalibrationError, DemoFormatError, ModelFormatError

MODEL_FORMAT = "predress-model"
MODEL_VERSION = 1

TABLE_COLUMNS = (
    "condition",
    "label",
    "opened_pct",
    "partly_pct",
    "arms_fwd_pct",
    "mean_iterations",
)


def _fmt(x):
    return repr(float(x))


# ---------------------------------------------------------------- demos


def write_demo(path, demo):
    with open(path, "w") as fh:
        header = {"labels": list(demo.labels), "rate_hz": demo.rate_hz, "kind": "single"}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for k in range(len(demo)):
            rec = {"t": float(demo.t[k]), "y": [float(v) for v in demo.channels[k]]}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_pair_demo(path, left, right):
    if len(left) != len(right) or np.any(left.t != right.t):
        raise DemoFormatError("paired demonstrations must share time stamps")
    if left.quats is None or right.quats is None:
        raise DemoFormatError("paired demonstrations must carry orientations")
    with open(path, "w") as fh:
        header = {"labels": list(left.labels), "rate_hz": left.rate_hz, "kind": "pair"}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for k in range(len(left)):
            rec = {
                "t": float(left.t[k]),
                "left": {
                    "p": [float(v) for v in left.channels[k]],
                    "q": [float(v) for v in left.quats[k]],
                },
                "right": {
                    "p": [float(v) for v in right.channels[k]],
                    "q": [float(v) for v in right.quats[k]],
                },
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _parse_lines(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DemoFormatError("%s line %d: %s" % (path, lineno, exc)) from exc


def _read_stream(path):
    lines = _parse_lines(path)
    try:
        _, header = next(lines)
    except StopIteration:
        raise DemoFormatError("%s: empty demonstration file" % path) from None
    if not isinstance(header, dict) or "labels" not in header or "rate_hz" not in header:
        raise DemoFormatError("%s: first line must carry labels and rate_hz" % path)
    labels = tuple(header["labels"])
    rate = float(header["rate_hz"])
    if rate <= 0:
        raise DemoFormatError("%s: rate_hz must be positive" % path)
    records = []
    for lineno, rec in lines:
        if not isinstance(rec, dict) or "t" not in rec:
            raise DemoFormatError("%s line %d: record needs a time stamp" % (path, lineno))
        records.append((lineno, rec))
    if not records:
        raise DemoFormatError("%s: no samples" % path)
    return labels, rate, records


def _vector(rec, key, n, path, lineno):
    val = rec.get(key)
    if not isinstance(val, list) or len(val) != n:
        raise DemoFormatError(
            "%s line %d: %r must be a list of %d numbers" % (path, lineno, key, n)
        )
    try:
        return [float(x) for x in val]
    except (TypeError, ValueError) as exc:
        raise DemoFormatError("%s line %d: bad %r entry" % (path, lineno, key)) from exc


def read_demo(path):
    """Read a single-stream demonstration (records carrying "y")."""
    labels, rate, records = _read_stream(path)
    n = len(labels)
    t = []
    rows = []
    for lineno, rec in records:
        if "y" not in rec:
            raise DemoFormatError(
                "%s line %d: expected single-stream record with 'y'" % (path, lineno)
            )
        t.append(float(rec["t"]))
        rows.append(_vector(rec, "y", n, path, lineno))
    return Demonstration(
        t=np.array(t), channels=np.array(rows), labels=labels, rate_hz=rate
    )


def read_pair_demo(path):
    """Read a paired demonstration; returns (left, right)."""
    labels, rate, records = _read_stream(path)
    n = len(labels)
    t = []
    sides = {"left": ([], []), "right": ([], [])}
    for lineno, rec in records:
        if "left" not in rec or "right" not in rec:
            raise DemoFormatError(
                "%s line %d: expected paired record with 'left' and 'right'" % (path, lineno)
            )
        t.append(float(rec["t"]))
        for side in ("left", "right"):
            arm = rec[side]
            if not isinstance(arm, dict):
                raise DemoFormatError("%s line %d: %r must be an object" % (path, lineno, side))
            sides[side][0].append(_vector(arm, "p", n, path, lineno))
            sides[side][1].append(_vector(arm, "q", 4, path, lineno))
    t = np.array(t)
    out = []
    for side in ("left", "right"):
        pos, quats = sides[side]
        out.append(
            Demonstration(
                t=t.copy(),
                channels=np.array(pos),
                labels=labels,
                rate_hz=rate,
                quats=np.array(quats),
            )
        )
    return out[0], out[1]


def demo_kind(path):
    """"single" or "pair", sniffed from the first data record."""
    _, _, records = _read_stream(path)
    rec = records[0][1]
    if "y" in rec:
        return "single"
    if "left" in rec and "right" in rec:
        return "pair"
    raise DemoFormatError("%s: unrecognized record shape" % path)


# ---------------------------------------------------------------- models


def model_to_dict(model):
    d = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "alpha_z": model.alpha_z,
        "beta_z": model.beta_z,
        "alpha_s": model.alpha_s,
        "tau": model.tau,
        "n_basis": model.n_basis,
        "centers": model.centers.tolist(),
        "widths": model.widths.tolist(),
        "weights": model.weights.tolist(),
        "y0": model.y0.tolist(),
        "goal": model.goal.tolist(),
        "amp_scaled": list(model.amp_scaled),
        "labels": list(model.labels),
        "orientation": None,
    }
    if model.has_orientation:
        d["orientation"] = {
            "weights": model.ori_weights.tolist(),
            "e0": model.ori_e0.tolist(),
            "goal_quat": model.ori_goal_quat.tolist(),
            "amp_scaled": list(model.ori_amp_scaled),
        }
    return d


def model_from_dict(d):
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a model file")
    if d.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            "model version %r unsupported (expected %d)" % (d.get("version"), MODEL_VERSION)
        )
    try:
        ori = d["orientation"]
        model = DMPModel(
            alpha_z=float(d["alpha_z"]),
            beta_z=float(d["beta_z"]),
            alpha_s=float(d["alpha_s"]),
            tau=float(d["tau"]),
            n_basis=int(d["n_basis"]),
            centers=np.array(d["centers"], dtype=float),
            widths=np.array(d["widths"], dtype=float),
            weights=np.array(d["weights"], dtype=float),
            y0=np.array(d["y0"], dtype=float),
            goal=np.array(d["goal"], dtype=float),
            amp_scaled=tuple(bool(x) for x in d["amp_scaled"]),
            labels=tuple(d["labels"]),
            ori_weights=None if ori is None else np.array(ori["weights"], dtype=float),
            ori_e0=None if ori is None else np.array(ori["e0"], dtype=float),
            ori_goal_quat=None if ori is None else np.array(ori["goal_quat"], dtype=float),
            ori_amp_scaled=None if ori is None else tuple(bool(x) for x in ori["amp_scaled"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError("malformed model file: %s" % exc) from exc
    if model.weights.shape != (len(model.labels), model.n_basis):
        raise ModelFormatError("weight matrix shape does not match labels/n_basis")
    if model.centers.shape != (model.n_basis,) or model.widths.shape != (model.n_basis,):
        raise ModelFormatError("basis arrays do not match n_basis")
    return model


def save_model(path, model):
    with open(path, "w") as fh:
        fh.write(json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n")


def load_model(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("%s: %s" % (path, exc)) from exc
    return model_from_dict(d)


# ---------------------------------------------------------------- limits


def save_limits(path, limits):
    d = {
        "pos_lo": limits.pos_lo.tolist(),
        "pos_hi": limits.pos_hi.tolist(),
        "vel_max": limits.vel_max.tolist(),
        "acc_max": limits.acc_max.tolist(),
        "safety_scale": limits.safety_scale,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(d, sort_keys=True, indent=2) + "\n")


def load_limits(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("%s: %s" % (path, exc)) from exc
    try:
        return KinematicLimits(
            pos_lo=np.array(d["pos_lo"], dtype=float),
            pos_hi=np.array(d["pos_hi"], dtype=float),
            vel_max=np.array(d["vel_max"], dtype=float),
            acc_max=np.array(d["acc_max"], dtype=float),
            safety_scale=float(d.get("safety_scale", 0.98)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError("%s: malformed limits: %s" % (path, exc)) from exc


# ---------------------------------------------------------------- CSV


def write_trajectory_csv(path, traj):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["t"]
        head += list(traj.labels)
        head += ["v_%s" % l for l in traj.labels]
        head += ["a_%s" % l for l in traj.labels]
        head.append("phase")
        if traj.quats is not None:
            head += ["qw", "qx", "qy", "qz"]
        w.writerow(head)
        for k in range(len(traj)):
            row = [_fmt(traj.t[k])]
            row += [_fmt(x) for x in traj.y[k]]
            row += [_fmt(x) for x in traj.v[k]]
            row += [_fmt(x) for x in traj.a[k]]
            row.append(_fmt(traj.phase[k]))
            if traj.quats is not None:
                row += [_fmt(x) for x in traj.quats[k]]
            w.writerow(row)


PAIR_CSV_COLUMNS = (
    "t",
    "left_x", "left_y", "left_z",
    "left_qw", "left_qx", "left_qy", "left_qz",
    "right_x", "right_y", "right_z",
    "right_qw", "right_qx", "right_qy", "right_qz",
    "phase",
)


def write_pair_csv(path, pair):
    if pair.left.quats is None or pair.right.quats is None:
        raise ValueError("paired export needs orientations on both arms")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PAIR_CSV_COLUMNS)
        for k in range(len(pair)):
            row = [_fmt(pair.t[k])]
            row += [_fmt(x) for x in pair.left.y[k]]
            row += [_fmt(x) for x in pair.left.quats[k]]
            row += [_fmt(x) for x in pair.right.y[k]]
            row += [_fmt(x) for x in pair.right.quats[k]]
            row.append(_fmt(pair.phase[k]))
            w.writerow(row)


def read_pair_csv(path):
    """Columns of a paired export as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        if tuple(head) != PAIR_CSV_COLUMNS:
            raise DemoFormatError("%s: unexpected paired CSV header" % path)
        cols = {name: [] for name in head}
        for row in r:
            for name, val in zip(head, row):
                cols[name].append(float(val))
    return {name: np.array(vals) for name, vals in cols.items()}


# ---------------------------------------------------------------- tables


def read_table_csv(path):
    """Calibration rows; extra columns are tolerated and ignored."""
    rows = []
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames is None:
            raise CalibrationError("%s: empty table" % path)
        missing = [c for c in TABLE_COLUMNS if c not in r.fieldnames]
        if missing:
            raise CalibrationError("%s: missing columns %s" % (path, ", ".join(missing)))
        for lineno, rec in enumerate(r, start=2):
            try:
                rows.append(
                    {
                        "condition": rec["condition"].strip(),
                        "label": rec["label"].strip(),
                        "opened_pct": float(rec["opened_pct"]),
                        "partly_pct": float(rec["partly_pct"]),
                        "arms_fwd_pct": float(rec["arms_fwd_pct"]),
                        "mean_iterations": float(rec["mean_iterations"]),
                    }
                )
            except (TypeError, ValueError, AttributeError) as exc:
                raise CalibrationError("%s line %d: %s" % (path, lineno, exc)) from exc
    if not rows:
        raise CalibrationError("%s: no data rows" % path)
    return rows


def write_table_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for row in rows:
            w.writerow(
                [
                    row["condition"],
                    row["label"],
                    "%.2f" % row["opened_pct"],
                    "%.2f" % row["partly_pct"],
                    "%.2f" % row["arms_fwd_pct"],
                    "%.2f" % row["mean_iterations"],
                ]
            )
