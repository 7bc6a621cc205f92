"""Garment state: categories, the calibrated response model, estimators.

The response model is a lookup from (condition, plan label) to outcome
statistics measured on hardware: how often the gown ends opened or partly
opened, how often the sleeves point forward, and the mean number of
iterations until the first category improvement.  Sampling consumes exactly
three uniform draws per episode, in a fixed order, so seeded runs replay
bit for bit regardless of the outcome.
"""

import json
import math
import os
import shlex
import socket
import subprocess
import sys
from dataclasses import dataclass
from enum import IntEnum

from .errors import CalibrationError, EstimatorError


class GarmentCategory(IntEnum):
    CLOSED = 0
    PARTLY_OPENED = 1
    OPENED = 2

    @property
    def wire(self):
        return _WIRE[self]


_WIRE = {
    GarmentCategory.CLOSED: "closed",
    GarmentCategory.PARTLY_OPENED: "partly_opened",
    GarmentCategory.OPENED: "opened",
}
_FROM_WIRE = {v: k for k, v in _WIRE.items()}

CONDITIONS = ("unpacked", "prev_opened")


def category_from_wire(name):
    try:
        return _FROM_WIRE[name]
    except KeyError:
        raise EstimatorError("unknown garment category %r" % (name,)) from None


@dataclass(frozen=True)
class ResponseEntry:
    p_opened: float
    p_partly: float
    p_arms_forward: float
    mean_iterations: float


class ResponseModel:
    def __init__(self, entries):
        self.entries = dict(entries)

    def lookup(self, condition, label):
        try:
            return self.entries[(condition, label)]
        except KeyError:
            raise CalibrationError(
                "no calibration for condition %r and plan %r" % (condition, label)
            ) from None

    def rows(self):
        out = []
        for (condition, label), e in sorted(self.entries.items()):
            out.append(
                {
                    "condition": condition,
                    "label": label,
                    "opened_pct": e.p_opened,
                    "partly_pct": e.p_partly,
                    "arms_fwd_pct": e.p_arms_forward,
                    "mean_iterations": e.mean_iterations,
                }
            )
        return out


def calibrate(rows):
    """Build a response model from table rows, validating every entry."""
    entries = {}
    for row in rows:
        condition = row["condition"]
        label = row["label"]
        if condition not in CONDITIONS:
            raise CalibrationError(
                "condition %r not one of %s" % (condition, ", ".join(CONDITIONS))
            )
        if not label:
            raise CalibrationError("empty plan label in table")
        key = (condition, label)
        if key in entries:
            raise CalibrationError("duplicate table row for %s / %s" % key)
        po = float(row["opened_pct"])
        pp = float(row["partly_pct"])
        pa = float(row["arms_fwd_pct"])
        mi = float(row["mean_iterations"])
        for name, val in (("opened_pct", po), ("partly_pct", pp), ("arms_fwd_pct", pa)):
            if not 0.0 <= val <= 100.0:
                raise CalibrationError("%s / %s: %s=%r outside [0, 100]" % (*key, name, val))
        if po + pp > 100.0 + 1e-9:
            raise CalibrationError("%s / %s: opened+partly exceeds 100" % key)
        if mi < 1.0:
            raise CalibrationError("%s / %s: mean_iterations must be >= 1" % key)
        entries[key] = ResponseEntry(po, pp, pa, mi)
    return ResponseModel(entries)


def sample_outcome(model, condition, plan, rng):
    """Draw (terminal category, arms_forward, iterations to first improvement).

    ``plan`` may be anything with a ``label`` attribute, or the label string
    itself.  Consumes exactly three uniforms in a fixed order: category,
    arms, iteration count.  A fractional mean m mixes floor(m) and ceil(m)
    with weight m - floor(m) on the ceiling, so the expectation equals m.
    """
    label = getattr(plan, "label", plan)
    entry = model.lookup(condition, label)
    u_cat = rng.random()
    u_arms = rng.random()
    u_iter = rng.random()

    po = entry.p_opened / 100.0
    pp = entry.p_partly / 100.0
    if u_cat < po:
        terminal = GarmentCategory.OPENED
    elif u_cat < po + pp:
        terminal = GarmentCategory.PARTLY_OPENED
    else:
        terminal = GarmentCategory.CLOSED

    arms = u_arms < entry.p_arms_forward / 100.0

    m = entry.mean_iterations
    base = math.floor(m)
    frac = m - base
    if frac <= 1e-9:
        k = int(base)
    else:
        k = int(base) + 1 if u_iter < frac else int(base)
    return terminal, bool(arms), max(1, k)


@dataclass(frozen=True)
class GarmentObservation:
    category: GarmentCategory
    confidence: float
    arms_forward: bool
    sleeves_visible: bool


def observe(truth, arms_sampled, category=None, confidence=1.0):
    """World-state bits for one look at the gown.

    Arms can only point forward once the gown has at least partly opened,
    and always do once it is fully opened; sleeves stay visible until then.
    """
    if truth == GarmentCategory.CLOSED:
        arms = False
    elif truth == GarmentCategory.OPENED:
        arms = True
    else:
        arms = bool(arms_sampled)
    return GarmentObservation(
        category=truth if category is None else category,
        confidence=float(confidence),
        arms_forward=arms,
        sleeves_visible=truth != GarmentCategory.OPENED,
    )


# ---------------------------------------------------------------- estimators


class MockEstimator:
    """Returns the simulated truth directly with full confidence."""

    name = "mock"

    def estimate_state(self, image, features):
        try:
            truth = features["truth"]
        except (TypeError, KeyError):
            raise EstimatorError("mock estimator needs a truth feature") from None
        return category_from_wire(truth), 1.0

    def close(self):
        pass


class BridgeEstimator:
    """Talks to an external classifier over newline-delimited JSON.

    Requests carry an integer id, an image reference, and a feature object;
    replies must echo the id and carry a category plus a confidence in
    [0, 1].  An "error" reply or any malformed traffic raises.
    """

    def __init__(self, endpoint):
        self._endpoint = endpoint
        self._proc = None
        self._sock = None
        self._rd = None
        self._wr = None
        self._next_id = 0

    name = "bridge"

    def _connect(self):
        kind = self._endpoint[0]
        if kind == "stdio":
            argv = self._endpoint[1]
            try:
                err_fd = sys.stderr.fileno()
            except (AttributeError, OSError, ValueError):
                err_fd = None  # stderr may be a pipe-less stand-in under test runners
            try:
                self._proc = subprocess.Popen(
                    argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=err_fd,
                )
            except OSError as exc:
                raise EstimatorError("cannot start bridge %r: %s" % (argv, exc)) from exc
            self._wr = self._proc.stdin
            self._rd = self._proc.stdout
        else:
            host, port = self._endpoint[1], self._endpoint[2]
            try:
                self._sock = socket.create_connection((host, port), timeout=30.0)
            except OSError as exc:
                raise EstimatorError("cannot reach bridge at %s:%d: %s" % (host, port, exc)) from exc
            self._wr = self._sock.makefile("wb")
            self._rd = self._sock.makefile("rb")

    def estimate_state(self, image, features):
        if self._rd is None:
            self._connect()
        self._next_id += 1
        req = {"id": self._next_id, "image": image, "features": features}
        try:
            self._wr.write((json.dumps(req, sort_keys=True) + "\n").encode())
            self._wr.flush()
            line = self._rd.readline()
        except (OSError, ValueError, BrokenPipeError) as exc:
            raise EstimatorError("bridge transport failed: %s" % exc) from exc
        if not line:
            raise EstimatorError("bridge closed the connection")
        try:
            reply = json.loads(line.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise EstimatorError("bridge sent malformed JSON: %s" % exc) from exc
        if not isinstance(reply, dict):
            raise EstimatorError("bridge reply must be an object")
        if reply.get("id") != self._next_id:
            raise EstimatorError(
                "bridge reply id %r does not match request %d" % (reply.get("id"), self._next_id)
            )
        if "error" in reply:
            raise EstimatorError("bridge error: %s" % reply["error"])
        category = category_from_wire(reply.get("category"))
        try:
            confidence = float(reply["confidence"])
        except (KeyError, TypeError, ValueError):
            raise EstimatorError("bridge reply lacks a numeric confidence") from None
        if not 0.0 <= confidence <= 1.0:
            raise EstimatorError("bridge confidence %r outside [0, 1]" % confidence)
        return category, confidence

    def close(self):
        for stream in (self._wr, self._rd):
            try:
                if stream is not None:
                    stream.close()
            except OSError:
                pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._proc is not None:
            try:
                self._proc.terminate()
                self._proc.wait(timeout=10.0)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
        self._proc = None
        self._sock = None
        self._rd = None
        self._wr = None


DEFAULT_BRIDGE_CMD = "%s -m predress_bridge --stdio --model mock" % sys.executable


def make_estimator(spec):
    """Estimator factory from a spec string.

    "mock" simulates perfectly; "bridge:stdio" spawns the external
    classifier process (override the command with PREDRESS_BRIDGE_CMD);
    "bridge:HOST:PORT" connects over TCP.
    """
    if spec == "mock":
        return MockEstimator()
    if spec == "bridge:stdio":
        cmd = os.environ.get("PREDRESS_BRIDGE_CMD", DEFAULT_BRIDGE_CMD)
        return BridgeEstimator(("stdio", shlex.split(cmd)))
    if spec.startswith("bridge:"):
        rest = spec[len("bridge:"):]
        host, sep, port = rest.rpartition(":")
        if not sep or not host:
            raise EstimatorError("bad bridge endpoint %r (want bridge:HOST:PORT)" % spec)
        try:
            port = int(port)
        except ValueError:
            raise EstimatorError("bad bridge port in %r" % spec) from None
        return BridgeEstimator(("tcp", host, port))
    raise EstimatorError("unknown estimator spec %r" % spec)
