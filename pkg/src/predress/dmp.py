"""Dynamic movement primitives for end-effector motion.

A model is fit to one demonstration and can be replayed toward new start
and goal positions.  The transformation system per channel is

    tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(s) * A
    tau * dy/dt = z

driven by a first-order phase  tau * ds/dt = -alpha_s * s  that decays from
1 toward 0, so the forcing term  f(s) = sum_i(psi_i(s) * w_i) / sum_i(psi_i)
* s  vanishes as the motion settles and the system reduces to a stable
spring-damper pulling onto the goal.  beta_z is pinned to alpha_z / 4
(critical damping).  A is the start-to-goal displacement unless that
displacement was degenerate at fit time, in which case scaling is disabled
for the channel.

Orientation is carried alongside as the rotation vector from the current
quaternion to the goal quaternion; those three channels share the phase and
basis of the model and are never subject to kinematic clamping.

Integration is semi-implicit Euler with per-step clamping of acceleration,
velocity, and position.  Whenever a clamp fires, the phase is held for that
step, so constrained replays stretch in time instead of being cut short.
One exception keeps replays from deadlocking: a clamped step that leaves
the state completely unchanged (position pinned against a bound, velocity
rewritten to zero) advances the phase anyway, since holding time at a
fixed point can never release the clamp.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import KernelError
from .errors import FitError, LimitViolation, PreprocessError, RolloutError
from .quat import (
    align_signs,
    orientation_displacement,
    quat_exp,
    quat_mul,
    quat_normalize,
    resample_quats,
)

ALPHA_S = math.log(100.0)
ALPHA_Z = 25.0
DEFAULT_DT = 0.002
DEFAULT_N_BASIS = 30
DEGENERATE_AMP = 1e-8
DEFAULT_SAFETY_SCALE = 0.98


@dataclass
class Demonstration:
    """A recorded motion: time stamps, channel values, optional quaternions."""

    t: np.ndarray
    channels: np.ndarray
    labels: tuple
    rate_hz: float
    quats: np.ndarray = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=float))
        if self.channels.shape[0] != self.t.shape[0]:
            raise ValueError("channels and t length mismatch")
        if not self.labels:
            self.labels = tuple("c%d" % i for i in range(self.channels.shape[1]))
        self.labels = tuple(self.labels)
        if len(self.labels) != self.channels.shape[1]:
            raise ValueError("labels and channel count mismatch")
        if self.quats is not None:
            self.quats = np.asarray(self.quats, dtype=float)
            if self.quats.shape != (self.t.shape[0], 4):
                raise ValueError("quats must be (n, 4)")

    def __len__(self):
        return self.t.shape[0]

    @property
    def n_channels(self):
        return self.channels.shape[1]

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def uniform_dt(self, rel_tol=1e-6):
        """Sample spacing, or None if the grid is not uniform."""
        if len(self) < 2:
            return None
        diffs = np.diff(self.t)
        dt = self.duration / (len(self) - 1)
        if dt <= 0 or np.any(np.abs(diffs - dt) > rel_tol * dt):
            return None
        return float(dt)


@dataclass
class PreprocessSpec:
    """How to condition a raw demonstration before fitting.

    Channels whose ``essential_axes`` entry is False are pinned to their
    first value; the rest are low-passed at ``cutoff_hz`` after resampling
    to ``target_rate_hz``.  ``essential_axes=None`` treats every channel
    as essential.
    """

    target_rate_hz: float
    cutoff_hz: float
    essential_axes: tuple = None

    def __post_init__(self):
        if self.essential_axes is not None:
            self.essential_axes = tuple(bool(x) for x in self.essential_axes)
            if not any(self.essential_axes):
                raise PreprocessError("at least one channel must stay essential")
        if self.target_rate_hz <= 0:
            raise PreprocessError("target rate must be positive")
        if not self.cutoff_hz > 0 or self.cutoff_hz >= 0.5 * self.target_rate_hz:
            raise PreprocessError(
                "cutoff %.3f Hz not inside (0, %.3f) Hz"
                % (self.cutoff_hz, 0.5 * self.target_rate_hz)
            )


@dataclass
class KinematicLimits:
    """Per-channel position bounds and velocity/acceleration magnitudes.

    Enforcement uses the bounds scaled by safety_scale: velocity and
    acceleration magnitudes are multiplied by it, position intervals are
    shrunk toward their midpoint by it.
    """

    pos_lo: np.ndarray
    pos_hi: np.ndarray
    vel_max: np.ndarray
    acc_max: np.ndarray
    safety_scale: float = DEFAULT_SAFETY_SCALE

    def __post_init__(self):
        self.pos_lo = np.asarray(self.pos_lo, dtype=float)
        self.pos_hi = np.asarray(self.pos_hi, dtype=float)
        self.vel_max = np.asarray(self.vel_max, dtype=float)
        self.acc_max = np.asarray(self.acc_max, dtype=float)
        n = self.pos_lo.shape[0]
        for arr, name in (
            (self.pos_hi, "pos_hi"),
            (self.vel_max, "vel_max"),
            (self.acc_max, "acc_max"),
        ):
            if arr.shape != (n,):
                raise ValueError("%s must have shape (%d,)" % (name, n))
        if np.any(self.pos_hi <= self.pos_lo):
            raise ValueError("pos_hi must exceed pos_lo")
        if np.any(self.vel_max <= 0) or np.any(self.acc_max <= 0):
            raise ValueError("vel_max and acc_max must be positive")
        if not 0.0 < self.safety_scale <= 1.0:
            raise ValueError("safety_scale must be in (0, 1]")

    @property
    def n_channels(self):
        return self.pos_lo.shape[0]

    def effective(self):
        """(pos_lo, pos_hi, vel_max, acc_max) actually enforced."""
        mid = 0.5 * (self.pos_lo + self.pos_hi)
        lo = mid - self.safety_scale * (mid - self.pos_lo)
        hi = mid + self.safety_scale * (self.pos_hi - mid)
        return lo, hi, self.safety_scale * self.vel_max, self.safety_scale * self.acc_max


@dataclass
class DMPModel:
    alpha_z: float
    beta_z: float
    alpha_s: float
    tau: float
    n_basis: int
    centers: np.ndarray
    widths: np.ndarray
    weights: np.ndarray
    y0: np.ndarray
    goal: np.ndarray
    amp_scaled: tuple
    labels: tuple
    ori_weights: np.ndarray = None
    ori_e0: np.ndarray = None
    ori_goal_quat: np.ndarray = None
    ori_amp_scaled: tuple = None

    @property
    def n_channels(self):
        return self.weights.shape[0]

    @property
    def has_orientation(self):
        return self.ori_weights is not None


@dataclass
class Trajectory:
    """A rolled-out motion sampled at fixed dt."""

    t: np.ndarray
    y: np.ndarray
    v: np.ndarray
    a: np.ndarray
    phase: np.ndarray
    labels: tuple
    dt: float
    quats: np.ndarray = None

    def __len__(self):
        return self.t.shape[0]

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    @property
    def n_channels(self):
        return self.y.shape[1]


def basis_functions(n_basis, alpha_s=ALPHA_S):
    """Gaussian basis centers (in phase) and widths, spaced evenly in time."""
    if n_basis < 2:
        raise FitError("need at least 2 basis functions")
    u = np.arange(n_basis) / (n_basis - 1.0)
    centers = np.exp(-alpha_s * u)
    widths = n_basis**1.5 / centers / alpha_s
    return centers, widths


def resample_and_filter(demo, spec):
    """Resample onto a uniform grid and low-pass the channels that matter.

    Essential channels get a zero-phase 2nd-order Butterworth low-pass;
    the rest are pinned to their first value.  Quaternions are interpolated
    and renormalized, never filtered.
    """
    from scipy.signal import butter, filtfilt

    target_rate_hz = spec.target_rate_hz
    cutoff_hz = spec.cutoff_hz
    essential = spec.essential_axes
    if len(demo) < 4:
        raise PreprocessError("demonstration too short (%d samples)" % len(demo))
    t = demo.t
    if np.any(np.diff(t) <= 0):
        raise PreprocessError("time stamps must be strictly increasing")
    if essential is None:
        essential = (True,) * demo.n_channels
    if len(essential) != demo.n_channels:
        raise PreprocessError("essential mask length mismatch")

    duration = demo.duration
    n_out = int(math.floor(duration * target_rate_hz)) + 1
    if n_out < 4:
        raise PreprocessError("demonstration too short for the target rate")
    t_new = t[0] + np.arange(n_out) / target_rate_hz

    resampled = np.column_stack(
        [np.interp(t_new, t, demo.channels[:, c]) for c in range(demo.n_channels)]
    )
    b, a = butter(2, cutoff_hz, fs=target_rate_hz, btype="low")
    padlen = min(9, n_out - 2)
    out = np.empty_like(resampled)
    for c in range(demo.n_channels):
        if essential[c]:
            out[:, c] = filtfilt(b, a, resampled[:, c], padlen=padlen)
        else:
            out[:, c] = resampled[0, c]

    quats = None
    if demo.quats is not None:
        quats = resample_quats(t, demo.quats, t_new)

    return Demonstration(
        t=t_new - t_new[0],
        channels=out,
        labels=demo.labels,
        rate_hz=float(target_rate_hz),
        quats=quats,
    )


def _solve_weights(Phi, targets):
    # Tiny ridge keeps the normal equations solvable when bases overlap.
    A = Phi.T @ Phi
    lam = 1e-10 * (np.trace(A) / A.shape[0] + 1.0)
    A = A + lam * np.eye(A.shape[0])
    return np.linalg.solve(A, Phi.T @ targets)


def fit(demo, n_basis=DEFAULT_N_BASIS, alpha_z=ALPHA_Z, alpha_s=ALPHA_S):
    """Fit model weights to a uniformly sampled demonstration.

    Derivatives come from central differences (one-sided at the ends), the
    phase is evaluated in closed form on the demo clock, and the weights of
    all channels solve one shared regularized least-squares system.
    """
    if len(demo) < 4:
        raise FitError("demonstration too short to fit")
    dt = demo.uniform_dt()
    if dt is None:
        raise FitError("demonstration must be uniformly sampled; preprocess first")
    tau = demo.duration
    if tau <= 0:
        raise FitError("demonstration duration must be positive")
    if alpha_z <= 0 or alpha_s <= 0:
        raise FitError("gains must be positive")

    beta_z = alpha_z / 4.0
    y = demo.channels
    v = np.gradient(y, dt, axis=0)
    acc = np.gradient(v, dt, axis=0)
    y0 = y[0].copy()
    goal = y[-1].copy()

    t_rel = demo.t - demo.t[0]
    s = np.exp(-alpha_s * t_rel / tau)
    centers, widths = basis_functions(n_basis, alpha_s)
    psi = np.exp(-widths[None, :] * (s[:, None] - centers[None, :]) ** 2)
    Phi = psi * (s / psi.sum(axis=1))[:, None]

    f_target = tau**2 * acc - alpha_z * (beta_z * (goal - y) - tau * v)
    amp = goal - y0
    scaled = np.abs(amp) > DEGENERATE_AMP
    targets = np.where(scaled[None, :], f_target / np.where(scaled, amp, 1.0), f_target)
    weights = _solve_weights(Phi, targets).T

    ori_weights = None
    ori_e0 = None
    ori_goal = None
    ori_scaled = None
    if demo.quats is not None:
        q = align_signs(demo.quats)
        ori_goal = quat_normalize(q[-1])
        e = np.array([orientation_displacement(qk, ori_goal) for qk in q])
        ev = np.gradient(e, dt, axis=0)
        ea = np.gradient(ev, dt, axis=0)
        f_ori = tau**2 * ea - alpha_z * (beta_z * (0.0 - e) - tau * ev)
        ori_e0 = e[0].copy()
        amp_o = 0.0 - ori_e0
        ori_scaled = np.abs(amp_o) > DEGENERATE_AMP
        t_o = np.where(
            ori_scaled[None, :], f_ori / np.where(ori_scaled, amp_o, 1.0), f_ori
        )
        ori_weights = _solve_weights(Phi, t_o).T

    return DMPModel(
        alpha_z=float(alpha_z),
        beta_z=float(beta_z),
        alpha_s=float(alpha_s),
        tau=float(tau),
        n_basis=int(n_basis),
        centers=centers,
        widths=widths,
        weights=weights,
        y0=y0,
        goal=goal,
        amp_scaled=tuple(bool(x) for x in scaled),
        labels=demo.labels,
        ori_weights=ori_weights,
        ori_e0=ori_e0,
        ori_goal_quat=ori_goal,
        ori_amp_scaled=None if ori_scaled is None else tuple(bool(x) for x in ori_scaled),
    )


def _rollout_bounds(model, start, goal, limits):
    n_main = model.n_channels
    if limits is None:
        return False, np.zeros(n_main), np.zeros(n_main), np.zeros(n_main), np.zeros(n_main)
    if limits.n_channels != n_main:
        raise LimitViolation(
            "limits cover %d channels, model has %d" % (limits.n_channels, n_main)
        )
    lo, hi, vel, acc = limits.effective()
    for c in range(n_main):
        if not lo[c] <= start[c] <= hi[c]:
            raise LimitViolation(
                "start position %.6f outside effective bounds [%.6f, %.6f] on channel %s"
                % (start[c], lo[c], hi[c], model.labels[c])
            )
        if not lo[c] <= goal[c] <= hi[c]:
            raise LimitViolation(
                "goal position %.6f outside effective bounds [%.6f, %.6f] on channel %s"
                % (goal[c], lo[c], hi[c], model.labels[c])
            )
    return True, lo, hi, vel, acc


def _stacked_arrays(model, start, goal):
    """Start/goal/amp/weights including orientation channels."""
    start_all = np.asarray(start, dtype=float)
    goal_all = np.asarray(goal, dtype=float)
    amp = np.where(
        np.array(model.amp_scaled), goal_all - start_all, 1.0
    )
    weights = model.weights
    if model.has_orientation:
        start_all = np.concatenate([start_all, model.ori_e0])
        goal_all = np.concatenate([goal_all, np.zeros(3)])
        amp_o = np.where(np.array(model.ori_amp_scaled), -model.ori_e0, 1.0)
        amp = np.concatenate([amp, amp_o])
        weights = np.vstack([weights, model.ori_weights])
    return start_all, goal_all, amp, weights


def _termination(model, start_all, goal_all, dt, stop_vel, max_steps):
    span = np.abs(goal_all - start_all)
    goal_tol = 0.5 * np.maximum(1e-3, 1e-3 * span)
    if stop_vel is None:
        stop_vel = 1e-4 * max(1.0, float(span.max()) if span.size else 1.0)
    if max_steps is None:
        max_steps = int(50.0 * model.tau / dt) + 2000
    s_min = math.exp(-model.alpha_s)
    return goal_tol, float(stop_vel), int(max_steps), s_min


def _quats_from_displacements(e_path, goal_quat):
    out = np.empty((e_path.shape[0], 4))
    for k in range(e_path.shape[0]):
        out[k] = quat_normalize(quat_mul(quat_exp(-e_path[k]), goal_quat))
    return out


def rollout(model, start=None, goal=None, dt=DEFAULT_DT, limits=None,
            stop_vel=None, max_steps=None):
    """Replay a model, optionally toward new endpoints and under limits.

    Terminates once the phase has decayed, the state is at rest, and every
    channel sits within its goal tolerance.  Raises RolloutError if the
    state diverges or the step budget runs out first.
    """
    if dt <= 0:
        raise RolloutError("dt must be positive")
    n_main = model.n_channels
    start = model.y0.copy() if start is None else np.asarray(start, dtype=float)
    goal = model.goal.copy() if goal is None else np.asarray(goal, dtype=float)
    if start.shape != (n_main,) or goal.shape != (n_main,):
        raise RolloutError("start and goal must have shape (%d,)" % n_main)

    has_limits, lo, hi, vel, acc = _rollout_bounds(model, start, goal, limits)
    start_all, goal_all, amp, weights = _stacked_arrays(model, start, goal)
    goal_tol, stop_vel, max_steps, s_min = _termination(
        model, start_all, goal_all, dt, stop_vel, max_steps
    )

    try:
        y, v, a, phase = _kernels.run_single(
            weights,
            model.centers,
            model.widths,
            amp,
            start_all,
            goal_all,
            model.alpha_z,
            model.beta_z,
            model.alpha_s,
            model.tau,
            dt,
            n_main,
            has_limits,
            lo,
            hi,
            vel,
            acc,
            s_min,
            stop_vel,
            goal_tol,
            max_steps,
        )
    except KernelError as exc:
        raise RolloutError(str(exc), step=exc.step) from exc

    quats = None
    if model.has_orientation:
        quats = _quats_from_displacements(y[:, n_main:], model.ori_goal_quat)
    n = y.shape[0]
    return Trajectory(
        t=np.arange(n) * dt,
        y=y[:, :n_main],
        v=v[:, :n_main],
        a=a[:, :n_main],
        phase=phase,
        labels=model.labels,
        dt=float(dt),
        quats=quats,
    )


def check_limits(traj, limits, tol=1e-9):
    """Raise LimitViolation unless the trajectory obeys the effective bounds."""
    if limits.n_channels != traj.n_channels:
        raise LimitViolation("limits do not match trajectory channel count")
    lo, hi, vel, acc = limits.effective()
    problems = []
    for c in range(traj.n_channels):
        for kind, series, bound_lo, bound_hi in (
            ("position", traj.y[:, c], lo[c] - tol, hi[c] + tol),
            ("velocity", traj.v[:, c], -vel[c] - tol, vel[c] + tol),
            ("acceleration", traj.a[:, c], -acc[c] - tol, acc[c] + tol),
        ):
            bad = np.flatnonzero((series < bound_lo) | (series > bound_hi))
            if bad.size:
                k = int(bad[0])
                problems.append(
                    "%s out of range on channel %s at sample %d (%.9f)"
                    % (kind, traj.labels[c], k, series[k])
                )
    if problems:
        raise LimitViolation("; ".join(problems[:5]))
