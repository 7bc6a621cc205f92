"""Two-arm coordination: shared-phase rollout and a hard separation cap."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import KernelError
from .dmp import DEFAULT_DT, Trajectory, _stacked_arrays
from .errors import LimitViolation, RolloutError
from .quat import quat_normalize

TAU_MISMATCH = 0.05


def enforce_max_distance(p_left, p_right, d_max):
    """Pull two points toward their midpoint so their distance is <= d_max.

    Accepts single points (3,) or stacked points (n, 3).  Points already
    within the cap are returned unchanged; the midpoint is preserved.
    """
    if d_max <= 0:
        raise ValueError("d_max must be positive")
    pl = np.asarray(p_left, dtype=float)
    pr = np.asarray(p_right, dtype=float)
    single = pl.ndim == 1
    pl = np.atleast_2d(pl).copy()
    pr = np.atleast_2d(pr).copy()
    diff = pl - pr
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    over = dist > d_max
    if np.any(over):
        half = 0.5 * (d_max / dist[over])
        mid = 0.5 * (pl[over] + pr[over])
        pl[over] = mid + diff[over] * half[:, None]
        pr[over] = mid - diff[over] * half[:, None]
    if single:
        return pl[0], pr[0]
    return pl, pr


@dataclass
class PairTrajectory:
    """Synchronized left/right trajectories on one clock and phase."""

    t: np.ndarray
    phase: np.ndarray
    left: Trajectory
    right: Trajectory
    d_max: float

    def __len__(self):
        return self.t.shape[0]

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def separations(self):
        return np.linalg.norm(self.left.y - self.right.y, axis=1)

    def max_separation(self):
        return float(self.separations().max())


def _check_pair_models(left, right):
    for side, model in (("left", left), ("right", right)):
        if model.n_channels != 3:
            raise RolloutError(
                "%s model has %d channels, paired replay needs 3" % (side, model.n_channels)
            )
    gap = abs(left.tau - right.tau) / max(left.tau, right.tau)
    if gap > TAU_MISMATCH:
        raise RolloutError(
            "model durations differ by %.1f%% (max %.0f%%)" % (100 * gap, 100 * TAU_MISMATCH)
        )
    if abs(left.alpha_s - right.alpha_s) > 1e-9 * max(left.alpha_s, right.alpha_s):
        raise RolloutError("models must share the phase decay rate")


def pair_rollout(left, right, limits=None, d_max=None, dt=DEFAULT_DT,
                 stop_vel=None, max_steps=None):
    """Replay two models together on a shared phase with a distance cap.

    A kinematic clamp on either arm holds the shared phase for that step.
    After every step both position triplets are projected to satisfy the
    cap; start and goal separations must already satisfy it.
    """
    if dt <= 0:
        raise RolloutError("dt must be positive")
    if d_max is None or d_max <= 0:
        raise RolloutError("d_max must be a positive distance")
    _check_pair_models(left, right)
    tau = 0.5 * (left.tau + right.tau)
    alpha_s = left.alpha_s

    start_sep = float(np.linalg.norm(left.y0 - right.y0))
    goal_sep = float(np.linalg.norm(left.goal - right.goal))
    if start_sep > d_max + 1e-9:
        raise RolloutError("start separation %.4f exceeds d_max %.4f" % (start_sep, d_max))
    if goal_sep > d_max + 1e-9:
        raise RolloutError("goal separation %.4f exceeds d_max %.4f" % (goal_sep, d_max))

    has_limits = limits is not None
    if has_limits:
        if limits.n_channels != 3:
            raise LimitViolation("paired replay needs 3-channel limits")
        lo, hi, vel, acc = limits.effective()
        for side, model in (("left", left), ("right", right)):
            for c in range(3):
                for what, val in (("start", model.y0[c]), ("goal", model.goal[c])):
                    if not lo[c] <= val <= hi[c]:
                        raise LimitViolation(
                            "%s %s %.6f outside effective bounds on channel %s"
                            % (side, what, val, model.labels[c])
                        )
    else:
        lo = hi = vel = acc = np.zeros(3)

    start_l, goal_l, amp_l, weights_l = _stacked_arrays(left, left.y0, left.goal)
    start_r, goal_r, amp_r, weights_r = _stacked_arrays(right, right.y0, right.goal)

    # shared settling thresholds from the wider of the two motions
    span = max(
        float(np.abs(goal_l - start_l).max()), float(np.abs(goal_r - start_r).max())
    )
    if stop_vel is None:
        stop_vel = 1e-4 * max(1.0, span)
    if max_steps is None:
        max_steps = int(50.0 * tau / dt) + 2000
    tol_l = 0.5 * np.maximum(1e-3, 1e-3 * np.abs(goal_l - start_l))
    tol_r = 0.5 * np.maximum(1e-3, 1e-3 * np.abs(goal_r - start_r))
    s_min = math.exp(-alpha_s)

    try:
        yl, vl, al, yr, vr, ar, phase = _kernels.run_pair(
            weights_l,
            left.centers,
            left.widths,
            amp_l,
            start_l,
            goal_l,
            left.alpha_z,
            left.beta_z,
            weights_r,
            right.centers,
            right.widths,
            amp_r,
            start_r,
            goal_r,
            right.alpha_z,
            right.beta_z,
            alpha_s,
            tau,
            dt,
            3,
            has_limits,
            lo,
            hi,
            vel,
            acc,
            float(d_max),
            s_min,
            float(stop_vel),
            tol_l,
            tol_r,
            int(max_steps),
        )
    except KernelError as exc:
        raise RolloutError(str(exc), step=exc.step) from exc

    n = yl.shape[0]
    t = np.arange(n) * dt

    def _arm(model, y, v, a):
        quats = None
        if model.has_orientation:
            from .dmp import _quats_from_displacements

            quats = _quats_from_displacements(y[:, 3:], model.ori_goal_quat)
        return Trajectory(
            t=t,
            y=y[:, :3],
            v=v[:, :3],
            a=a[:, :3],
            phase=phase,
            labels=model.labels,
            dt=float(dt),
            quats=quats,
        )

    return PairTrajectory(
        t=t,
        phase=phase,
        left=_arm(left, yl, vl, al),
        right=_arm(right, yr, vr, ar),
        d_max=float(d_max),
    )


def constant_orientation(n, quat):
    q = quat_normalize(quat)
    return np.tile(q, (n, 1))


def min_jerk_profile(x0, x1, duration, t):
    """Position, velocity, acceleration of a rest-to-rest minimum-jerk reach."""
    u = np.clip(np.asarray(t, dtype=float) / duration, 0.0, 1.0)
    d = x1 - x0
    pos = x0 + d * (10 * u**3 - 15 * u**4 + 6 * u**5)
    vel = d / duration * (30 * u**2 - 60 * u**3 + 30 * u**4)
    acc = d / duration**2 * (60 * u - 180 * u**2 + 120 * u**3)
    return pos, vel, acc
