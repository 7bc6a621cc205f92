"""Unit quaternion helpers (scalar-first, [w, x, y, z])."""

import numpy as np

TOL = 1e-12


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < TOL:
        raise ValueError("cannot normalize a near-zero quaternion")
    return q / n


def quat_conj(q):
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_log(q):
    """Rotation vector of a unit quaternion, angle in [0, pi]."""
    q = quat_normalize(q)
    if q[0] < 0.0:
        q = -q
    v = q[1:4]
    s = np.linalg.norm(v)
    if s < TOL:
        return v * (2.0 / q[0])
    angle = 2.0 * np.arctan2(s, q[0])
    return v * (angle / s)


def quat_exp(r):
    """Unit quaternion for a rotation vector."""
    r = np.asarray(r, dtype=float)
    angle = np.linalg.norm(r)
    if angle < TOL:
        q = np.array([1.0, 0.5 * r[0], 0.5 * r[1], 0.5 * r[2]])
    else:
        half = 0.5 * angle
        k = np.sin(half) / angle
        q = np.array([np.cos(half), k * r[0], k * r[1], k * r[2]])
    return quat_normalize(q)


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < TOL:
        raise ValueError("axis must be nonzero")
    return quat_exp(axis * (angle / n))


def orientation_displacement(q_from, q_to):
    """Rotation vector carrying q_from onto q_to: exp(d) * q_from == q_to."""
    return quat_log(quat_mul(q_to, quat_conj(q_from)))


def align_signs(quats):
    """Flip signs so consecutive quaternions sit in the same hemisphere."""
    out = np.array(quats, dtype=float)
    for i in range(1, len(out)):
        if np.dot(out[i], out[i - 1]) < 0.0:
            out[i] = -out[i]
    return out


def resample_quats(t_src, quats, t_dst):
    """Linear quaternion interpolation onto a new time grid, renormalized.

    Plain lerp + normalize is accurate for the small per-sample rotations
    seen at demonstration rates and avoids slerp's axis degeneracies.
    """
    t_src = np.asarray(t_src, dtype=float)
    q = align_signs(quats)
    out = np.empty((len(t_dst), 4))
    idx = np.clip(np.searchsorted(t_src, t_dst, side="right") - 1, 0, len(t_src) - 2)
    for k, t in enumerate(t_dst):
        i = idx[k]
        span = t_src[i + 1] - t_src[i]
        w = 0.0 if span <= 0.0 else min(max((t - t_src[i]) / span, 0.0), 1.0)
        out[k] = quat_normalize((1.0 - w) * q[i] + w * q[i + 1])
    return out


def rotation_accumulation(quats):
    """Per-axis sum of |rotation vector| increments along a quaternion path."""
    q = align_signs(quats)
    total = np.zeros(3)
    for i in range(1, len(q)):
        total += np.abs(orientation_displacement(q[i - 1], q[i]))
    return total
