"""Quaternion helpers checked against scipy's Rotation as an independent oracle.

scipy stores quaternions scalar-last; the package stores them scalar-first.
The converters below are the only bridge between the two conventions.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation, Slerp

from predress.quat import (
    align_signs,
    orientation_displacement,
    quat_conj,
    quat_exp,
    quat_from_axis_angle,
    quat_log,
    quat_mul,
    quat_normalize,
    resample_quats,
    rotation_accumulation,
)


def to_scipy(q):
    return Rotation.from_quat([q[1], q[2], q[3], q[0]])


def from_scipy(rot):
    x, y, z, w = rot.as_quat()
    return np.array([w, x, y, z])


def quats_close(a, b, tol=1e-9):
    # equal up to the double-cover sign
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) <= tol


def random_unit_quats(n, seed):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def test_normalize_unit_output():
    q = quat_normalize([2.0, 0.0, 0.0, 0.0])
    assert np.allclose(q, [1, 0, 0, 0])
    assert np.isclose(np.linalg.norm(quat_normalize([1, 2, 3, 4])), 1.0)


def test_normalize_rejects_zero():
    with pytest.raises(ValueError):
        quat_normalize([0.0, 0.0, 0.0, 0.0])


def test_conjugate_inverts_unit_quaternions():
    for q in random_unit_quats(50, seed=1):
        ident = quat_mul(q, quat_conj(q))
        assert quats_close(ident, np.array([1.0, 0.0, 0.0, 0.0]))


def test_mul_matches_scipy_composition():
    qs = random_unit_quats(40, seed=2)
    for a, b in zip(qs[:20], qs[20:]):
        ours = quat_mul(a, b)
        oracle = from_scipy(to_scipy(a) * to_scipy(b))
        assert quats_close(ours, oracle)


def test_exp_matches_scipy_rotvec():
    rng = np.random.default_rng(3)
    for _ in range(50):
        r = rng.normal(size=3) * rng.uniform(0.0, 3.0)
        ours = quat_exp(r)
        oracle = from_scipy(Rotation.from_rotvec(r))
        assert quats_close(ours, oracle)


def test_exp_small_angle():
    r = np.array([1e-14, -2e-14, 3e-14])
    q = quat_exp(r)
    assert np.isclose(np.linalg.norm(q), 1.0)
    assert quats_close(q, np.array([1.0, 0.0, 0.0, 0.0]), tol=1e-12)


def test_log_matches_scipy_rotvec():
    for q in random_unit_quats(50, seed=4):
        ours = quat_log(q)
        oracle = to_scipy(q).as_rotvec()
        assert np.allclose(ours, oracle, atol=1e-9)


def test_log_angle_range():
    for q in random_unit_quats(100, seed=5):
        angle = np.linalg.norm(quat_log(q))
        assert 0.0 <= angle <= np.pi + 1e-12


def test_log_exp_round_trip():
    for q in random_unit_quats(100, seed=6):
        assert quats_close(quat_exp(quat_log(q)), q)


def test_log_is_sign_invariant():
    for q in random_unit_quats(20, seed=7):
        assert np.allclose(quat_log(q), quat_log(-q))


def test_from_axis_angle():
    q = quat_from_axis_angle([0, 0, 2.0], np.pi / 2)  # non-unit axis allowed
    oracle = from_scipy(Rotation.from_rotvec([0, 0, np.pi / 2]))
    assert quats_close(q, oracle)
    with pytest.raises(ValueError):
        quat_from_axis_angle([0, 0, 0], 1.0)


def test_displacement_identity_is_zero():
    for q in random_unit_quats(20, seed=8):
        assert np.allclose(orientation_displacement(q, q), 0.0, atol=1e-9)


def test_displacement_quarter_turn_about_z():
    ident = np.array([1.0, 0.0, 0.0, 0.0])
    target = quat_from_axis_angle([0, 0, 1], np.pi / 2)
    d = orientation_displacement(ident, target)
    assert np.allclose(d, [0.0, 0.0, np.pi / 2], atol=1e-12)


def test_displacement_round_trip_random_pairs():
    qs = random_unit_quats(400, seed=9)
    for q_from, q_to in zip(qs[:200], qs[200:]):
        d = orientation_displacement(q_from, q_to)
        back = quat_mul(quat_exp(d), q_from)
        assert quats_close(back, q_to, tol=1e-9)


def test_displacement_matches_scipy():
    qs = random_unit_quats(100, seed=10)
    for q_from, q_to in zip(qs[:50], qs[50:]):
        ours = orientation_displacement(q_from, q_to)
        oracle = (to_scipy(q_to) * to_scipy(q_from).inv()).as_rotvec()
        assert np.allclose(ours, oracle, atol=1e-9)


def test_align_signs_consecutive_dots_nonnegative():
    rng = np.random.default_rng(11)
    q = random_unit_quats(30, seed=12)
    flipped = q * np.where(rng.random(30) < 0.5, -1.0, 1.0)[:, None]
    aligned = align_signs(flipped)
    dots = np.sum(aligned[1:] * aligned[:-1], axis=1)
    assert np.all(dots >= 0.0)


def _slow_rotation_path(n, seed=13):
    """Dense path with small per-sample steps (like a real recording)."""
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    t = np.linspace(0.0, 1.0, n)
    angles = 0.8 * np.sin(np.pi * t)
    return t, np.array([quat_from_axis_angle(axis, a) for a in angles])


def test_resample_quats_matches_slerp_on_dense_paths():
    t, quats = _slow_rotation_path(200)
    t_new = np.linspace(0.0, 1.0, 501)
    ours = resample_quats(t, quats, t_new)
    oracle = Slerp(t, to_scipy_path(quats))(t_new)
    for q_ours, rot in zip(ours, oracle):
        assert quats_close(q_ours, from_scipy(rot), tol=1e-6)
    assert np.allclose(np.linalg.norm(ours, axis=1), 1.0, atol=1e-12)


def to_scipy_path(quats):
    return Rotation.from_quat(np.column_stack([quats[:, 1:], quats[:, 0]]))


def test_resample_quats_endpoints_and_sign_robustness():
    t, quats = _slow_rotation_path(50, seed=14)
    noisy = quats.copy()
    noisy[::7] *= -1.0  # recorded hemisphere flips must not produce jumps
    out = resample_quats(t, noisy, t)
    for q_in, q_out in zip(quats, out):
        assert quats_close(q_in, q_out, tol=1e-9)
    dots = np.sum(out[1:] * out[:-1], axis=1)
    assert np.all(dots > 0.9)  # continuous, no jumps


def test_rotation_accumulation_total_variation():
    # up 0.8 rad then back down about one axis: total variation 1.6 rad on Y
    t = np.linspace(0.0, 1.0, 400)
    angles = 0.8 * np.sin(np.pi * t)
    quats = np.array([quat_from_axis_angle([0, 1, 0], a) for a in angles])
    acc = rotation_accumulation(quats)
    assert abs(acc[1] - 1.6) < 1e-3
    assert acc[0] < 1e-9 and acc[2] < 1e-9
