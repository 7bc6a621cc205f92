"""Two-arm coordination: separation cap, paired replay, closed-form reach."""

import dataclasses

import numpy as np
import pytest

from predress.bimanual import (
    TAU_MISMATCH,
    constant_orientation,
    enforce_max_distance,
    min_jerk_profile,
    pair_rollout,
)
from predress.dmp import Demonstration, KinematicLimits, fit
from predress.errors import LimitViolation, RolloutError


@pytest.fixture(scope="module")
def fling(registry):
    return registry.get("Fling")


# ---------------------------------------------------------------------------
# enforce_max_distance


def test_projection_caps_and_preserves_midpoint():
    rng = np.random.default_rng(2024)
    pl = rng.normal(scale=2.0, size=(10_000, 3))
    pr = rng.normal(scale=2.0, size=(10_000, 3))
    d_max = 0.75
    before_mid = 0.5 * (pl + pr)
    was_over = np.linalg.norm(pl - pr, axis=1) > d_max
    assert was_over.any() and (~was_over).any()  # both branches exercised

    ql, qr = enforce_max_distance(pl, pr, d_max)
    dist = np.linalg.norm(ql - qr, axis=1)
    assert np.all(dist <= d_max * (1 + 1e-12))
    # projected pairs land exactly on the cap, midpoints never move
    assert np.allclose(dist[was_over], d_max, rtol=1e-12, atol=0)
    after_mid = 0.5 * (ql + qr)
    assert np.abs(after_mid - before_mid).max() <= 1e-12


def test_projection_is_idempotent():
    rng = np.random.default_rng(7)
    pl = rng.normal(scale=3.0, size=(10_000, 3))
    pr = rng.normal(scale=3.0, size=(10_000, 3))
    ql, qr = enforce_max_distance(pl, pr, 0.6)
    ql2, qr2 = enforce_max_distance(ql, qr, 0.6)
    assert np.abs(ql2 - ql).max() <= 1e-12
    assert np.abs(qr2 - qr).max() <= 1e-12


def test_projection_leaves_close_pairs_untouched():
    rng = np.random.default_rng(99)
    pl = rng.normal(scale=0.05, size=(500, 3))
    pr = rng.normal(scale=0.05, size=(500, 3))
    assert np.linalg.norm(pl - pr, axis=1).max() < 1.0
    ql, qr = enforce_max_distance(pl, pr, 1.0)
    assert np.array_equal(ql, pl)
    assert np.array_equal(qr, pr)


def test_projection_single_point_form_matches_stacked():
    pl = np.array([1.0, 2.0, 3.0])
    pr = np.array([-1.0, 0.5, 3.0])
    sl, sr = enforce_max_distance(pl, pr, 0.5)
    assert sl.shape == (3,) and sr.shape == (3,)
    bl, br = enforce_max_distance(pl[None, :], pr[None, :], 0.5)
    assert np.array_equal(sl, bl[0])
    assert np.array_equal(sr, br[0])
    assert np.isclose(np.linalg.norm(sl - sr), 0.5, rtol=1e-12)


def test_projection_rejects_nonpositive_cap():
    p = np.zeros(3)
    for bad in (0.0, -0.1):
        with pytest.raises(ValueError):
            enforce_max_distance(p, p, bad)


# ---------------------------------------------------------------------------
# closed-form building blocks


def test_min_jerk_profile_endpoints_and_derivatives():
    x0, x1, duration = -0.2, 0.7, 0.9
    t = np.arange(0.0, duration + 1e-4, 1e-4)
    pos, vel, acc = min_jerk_profile(x0, x1, duration, t)
    assert np.isclose(pos[0], x0) and np.isclose(pos[-1], x1)
    assert np.isclose(vel[0], 0.0) and abs(vel[-1]) < 1e-9
    assert np.isclose(acc[0], 0.0) and abs(acc[-1]) < 1e-6
    # the analytic derivatives must agree with numerical ones
    dpos = np.gradient(pos, t)
    dvel = np.gradient(vel, t)
    assert np.abs(vel[1:-1] - dpos[1:-1]).max() < 1e-4
    assert np.abs(acc[1:-1] - dvel[1:-1]).max() < 1e-3


def test_min_jerk_profile_clamps_past_duration():
    pos, vel, acc = min_jerk_profile(0.0, 1.0, 0.5, np.array([0.6, 0.9, 2.0]))
    assert np.allclose(pos, 1.0)
    assert np.allclose(vel, 0.0, atol=1e-12)
    assert np.allclose(acc, 0.0, atol=1e-9)


def test_constant_orientation_normalizes_and_tiles():
    q = constant_orientation(5, np.array([2.0, 0.0, 0.0, 0.0]))
    assert q.shape == (5, 4)
    assert np.allclose(q, np.tile([1.0, 0.0, 0.0, 0.0], (5, 1)))
    assert np.allclose(np.linalg.norm(q, axis=1), 1.0)


# ---------------------------------------------------------------------------
# paired replay


def test_pair_path_independent_of_slack_cap(fling):
    a = pair_rollout(fling.left, fling.right, limits=fling.limits, d_max=10.0)
    b = pair_rollout(fling.left, fling.right, limits=fling.limits, d_max=50.0)
    assert a.max_separation() < 10.0  # the cap never engaged
    assert np.array_equal(a.left.y, b.left.y)
    assert np.array_equal(a.right.y, b.right.y)
    assert np.array_equal(a.phase, b.phase)


def test_pair_cap_engages_and_goals_still_reached(fling):
    free = pair_rollout(fling.left, fling.right, limits=fling.limits, d_max=50.0)
    nat = free.max_separation()
    s0 = float(np.linalg.norm(fling.left.y0 - fling.right.y0))
    s1 = float(np.linalg.norm(fling.left.goal - fling.right.goal))
    assert nat > max(s0, s1)  # this pair genuinely bulges outward mid-motion
    cap = s0 + 0.8 * (nat - s0)

    pair = pair_rollout(fling.left, fling.right, limits=fling.limits, d_max=cap)
    seps = pair.separations()
    assert seps.max() <= cap + 1e-9
    assert np.isclose(pair.max_separation(), cap, rtol=1e-9)
    assert np.abs(pair.left.y[-1] - fling.left.goal).max() <= 1e-3
    assert np.abs(pair.right.y[-1] - fling.right.goal).max() <= 1e-3
    assert pair.d_max == cap


def test_pair_shares_one_clock_and_phase(fling):
    pair = pair_rollout(fling.left, fling.right, limits=fling.limits, d_max=fling.d_max)
    assert pair.left.phase is pair.phase and pair.right.phase is pair.phase
    assert pair.left.t is pair.t and pair.right.t is pair.t
    assert pair.phase[0] == 1.0
    assert np.all(np.diff(pair.phase) <= 0)
    assert len(pair) == pair.t.shape[0]
    assert np.isclose(pair.duration, pair.t[-1])
    assert np.isclose(pair.t[1] - pair.t[0], 0.002)


def test_pair_orientation_tracks_are_unit_quaternions(fling):
    pair = pair_rollout(fling.left, fling.right, limits=fling.limits, d_max=fling.d_max)
    for arm in (pair.left, pair.right):
        assert arm.quats is not None
        assert arm.quats.shape == (len(pair), 4)
        assert np.abs(np.linalg.norm(arm.quats, axis=1) - 1.0).max() < 1e-9


def _position_only_pair():
    """Two synthetic 3-channel reaches 0.3 m apart, no orientation track."""
    duration = 0.8
    t = np.arange(0.0, duration + 1e-12, 1.0 / 250.0)
    starts = (np.zeros(3), np.array([0.3, 0.0, 0.0]))
    goals = (np.array([0.2, 0.3, 0.1]), np.array([0.5, 0.3, 0.1]))
    models = []
    for y0, g in zip(starts, goals):
        pos = np.stack(
            [min_jerk_profile(y0[c], g[c], duration, t)[0] for c in range(3)], axis=1
        )
        demo = Demonstration(t=t, channels=pos, labels=("x", "y", "z"), rate_hz=250.0)
        models.append(fit(demo))
    return models


def test_pair_without_orientation_has_no_quats():
    left, right = _position_only_pair()
    pair = pair_rollout(left, right, d_max=0.5)
    assert pair.left.quats is None and pair.right.quats is None
    assert np.abs(pair.left.y[-1] - left.goal).max() <= 1e-3
    assert np.abs(pair.right.y[-1] - right.goal).max() <= 1e-3
    assert np.isclose(np.linalg.norm(pair.left.y[0] - pair.right.y[0]), 0.3)


def test_pair_rejects_missing_or_nonpositive_cap(fling):
    for bad in (None, 0.0, -0.4):
        with pytest.raises(RolloutError, match="d_max"):
            pair_rollout(fling.left, fling.right, d_max=bad)


def test_pair_rejects_nonpositive_dt(fling):
    with pytest.raises(RolloutError, match="dt"):
        pair_rollout(fling.left, fling.right, d_max=fling.d_max, dt=0.0)


def test_pair_rejects_non_three_channel_models():
    t = np.arange(0.0, 0.5 + 1e-12, 1.0 / 250.0)
    pos = np.stack([min_jerk_profile(0.0, 0.3, 0.5, t)[0]] * 2, axis=1)
    flat = fit(Demonstration(t=t, channels=pos, labels=("x", "y"), rate_hz=250.0))
    with pytest.raises(RolloutError, match="3"):
        pair_rollout(flat, flat, d_max=1.0)


def test_pair_duration_mismatch_boundary(fling):
    slower = dataclasses.replace(fling.right, tau=fling.right.tau * 1.04)
    pair = pair_rollout(fling.left, slower, d_max=fling.d_max)  # 3.8% gap: accepted
    assert len(pair) > 0
    way_off = dataclasses.replace(fling.right, tau=fling.right.tau * 1.2)
    with pytest.raises(RolloutError, match="durations differ"):
        pair_rollout(fling.left, way_off, d_max=fling.d_max)
    assert 0.0 < TAU_MISMATCH < 0.2


def test_pair_rejects_phase_rate_mismatch(fling):
    other = dataclasses.replace(fling.right, alpha_s=fling.right.alpha_s * 1.01)
    with pytest.raises(RolloutError, match="phase"):
        pair_rollout(fling.left, other, d_max=fling.d_max)


def test_pair_rejects_start_separation_over_cap(fling):
    s0 = float(np.linalg.norm(fling.left.y0 - fling.right.y0))
    with pytest.raises(RolloutError, match="start separation"):
        pair_rollout(fling.left, fling.right, d_max=0.9 * s0)


def test_pair_rejects_goal_separation_over_cap(fling):
    away = fling.right.goal - fling.left.goal
    away = away / np.linalg.norm(away)
    far_goal = fling.right.goal + 0.3 * away
    moved = dataclasses.replace(fling.right, goal=far_goal)
    s0 = float(np.linalg.norm(fling.left.y0 - fling.right.y0))
    cap = s0 + 0.05  # start fits, the pushed-out goal does not
    with pytest.raises(RolloutError, match="goal separation"):
        pair_rollout(fling.left, moved, d_max=cap)


def test_pair_rejects_limits_with_wrong_channel_count(fling):
    flat_limits = KinematicLimits(
        pos_lo=np.array([-1.0, -1.0]),
        pos_hi=np.array([1.0, 1.0]),
        vel_max=np.array([1.0, 1.0]),
        acc_max=np.array([1.0, 1.0]),
    )
    with pytest.raises(LimitViolation, match="3-channel"):
        pair_rollout(fling.left, fling.right, limits=flat_limits, d_max=fling.d_max)


def test_pair_rejects_start_outside_effective_bounds(fling):
    x0 = float(fling.left.y0[0])
    tight = KinematicLimits(
        pos_lo=np.array([x0 + 0.05, -5.0, -5.0]),
        pos_hi=np.array([x0 + 5.0, 5.0, 5.0]),
        vel_max=np.full(3, 100.0),
        acc_max=np.full(3, 1000.0),
    )
    with pytest.raises(LimitViolation, match="outside effective bounds"):
        pair_rollout(fling.left, fling.right, limits=tight, d_max=fling.d_max)
