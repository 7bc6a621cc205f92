"""Reference rollout steppers in plain Python.

The compiled module (`_rollout.pyx`) mirrors these loops operation for
operation so both backends produce bit-identical trajectories.  Any change
here must be copied there.
"""

import math

import numpy as np


class KernelError(Exception):
    """Raised by a stepper on divergence or an exhausted step budget."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


def _as_lists(weights):
    return [list(map(float, row)) for row in np.asarray(weights, dtype=float)]


def run_single(
    weights,
    centers,
    widths,
    amp,
    y_start,
    goal,
    alpha_z,
    beta_z,
    alpha_s,
    tau,
    dt,
    n_main,
    has_limits,
    pos_lo,
    pos_hi,
    vel_max,
    acc_max,
    s_min,
    stop_vel,
    goal_tol,
    max_steps,
):
    """Integrate one arm until the phase has decayed and the state settled.

    Returns (y, v, a, phase) arrays with one row per recorded step.  The
    first row is the start state, the last row the state at termination.
    """
    W = _as_lists(weights)
    cen = list(map(float, centers))
    wid = list(map(float, widths))
    ampl = list(map(float, amp))
    gl = list(map(float, goal))
    tol = list(map(float, goal_tol))
    lo = list(map(float, pos_lo))
    hi = list(map(float, pos_hi))
    vm = list(map(float, vel_max))
    am = list(map(float, acc_max))
    n = len(ampl)
    B = len(cen)
    tau2 = tau * tau

    y = list(map(float, y_start))
    v = [0.0] * n
    a = [0.0] * n
    psi = [0.0] * B
    out_y = []
    out_v = []
    out_a = []
    out_s = []

    s = 1.0
    k = 0
    while True:
        sum_psi = 0.0
        for b in range(B):
            d = s - cen[b]
            p = math.exp(-wid[b] * d * d)
            psi[b] = p
            sum_psi += p
        clamped = False
        for c in range(n):
            num = 0.0
            wr = W[c]
            for b in range(B):
                num += psi[b] * wr[b]
            f = num / sum_psi * s * ampl[c]
            acc = (alpha_z * (beta_z * (gl[c] - y[c]) - tau * v[c]) + f) / tau2
            if has_limits and c < n_main:
                if acc > am[c]:
                    acc = am[c]
                    clamped = True
                elif acc < -am[c]:
                    acc = -am[c]
                    clamped = True
            a[c] = acc

        out_y.append(list(y))
        out_v.append(list(v))
        out_a.append(list(a))
        out_s.append(s)

        if s <= s_min:
            vpeak = 0.0
            for c in range(n):
                av = v[c] if v[c] >= 0.0 else -v[c]
                if av > vpeak:
                    vpeak = av
            if vpeak <= stop_vel:
                settled = True
                for c in range(n):
                    e = gl[c] - y[c]
                    if e < 0.0:
                        e = -e
                    if e > tol[c]:
                        settled = False
                        break
                if settled:
                    break

        if k + 1 >= max_steps:
            raise KernelError("step budget exhausted before settling", k)

        bad = False
        moved = False
        for c in range(n):
            vn = v[c] + a[c] * dt
            if has_limits and c < n_main:
                if vn > vm[c]:
                    vn = vm[c]
                    clamped = True
                elif vn < -vm[c]:
                    vn = -vm[c]
                    clamped = True
            yn = y[c] + vn * dt
            if has_limits and c < n_main:
                if yn > hi[c]:
                    yn = hi[c]
                    vn = (yn - y[c]) / dt
                    clamped = True
                elif yn < lo[c]:
                    yn = lo[c]
                    vn = (yn - y[c]) / dt
                    clamped = True
            if vn != v[c] or yn != y[c]:
                moved = True
            v[c] = vn
            y[c] = yn
            if not (math.isfinite(vn) and math.isfinite(yn)):
                bad = True
        k += 1
        if bad:
            raise KernelError("non-finite state at step %d" % k, k)
        # Phase stopping dilates time while a clamp is active, but a step
        # that changed nothing (state pinned at a position bound) would
        # dilate forever; advancing the phase is the only way forward.
        if not clamped or not moved:
            s = s - (alpha_s * s / tau) * dt

    return (
        np.array(out_y, dtype=float),
        np.array(out_v, dtype=float),
        np.array(out_a, dtype=float),
        np.array(out_s, dtype=float),
    )


def run_pair(
    weights_l,
    centers_l,
    widths_l,
    amp_l,
    y_start_l,
    goal_l,
    alpha_z_l,
    beta_z_l,
    weights_r,
    centers_r,
    widths_r,
    amp_r,
    y_start_r,
    goal_r,
    alpha_z_r,
    beta_z_r,
    alpha_s,
    tau,
    dt,
    n_main,
    has_limits,
    pos_lo,
    pos_hi,
    vel_max,
    acc_max,
    d_max,
    s_min,
    stop_vel,
    goal_tol_l,
    goal_tol_r,
    max_steps,
):
    """Integrate two arms on one shared phase with a distance cap.

    A kinematic clamp on either arm stalls the shared phase for that step.
    After each integration step the two position triplets are pulled toward
    their midpoint so their separation never exceeds d_max.
    """
    WL = _as_lists(weights_l)
    WR = _as_lists(weights_r)
    cenl = list(map(float, centers_l))
    widl = list(map(float, widths_l))
    cenr = list(map(float, centers_r))
    widr = list(map(float, widths_r))
    ampl = list(map(float, amp_l))
    ampr = list(map(float, amp_r))
    gll = list(map(float, goal_l))
    glr = list(map(float, goal_r))
    toll = list(map(float, goal_tol_l))
    tolr = list(map(float, goal_tol_r))
    lo = list(map(float, pos_lo))
    hi = list(map(float, pos_hi))
    vm = list(map(float, vel_max))
    am = list(map(float, acc_max))
    nl = len(ampl)
    nr = len(ampr)
    Bl = len(cenl)
    Br = len(cenr)
    tau2 = tau * tau

    yl = list(map(float, y_start_l))
    yr = list(map(float, y_start_r))
    vl = [0.0] * nl
    vr = [0.0] * nr
    al = [0.0] * nl
    ar = [0.0] * nr
    psil = [0.0] * Bl
    psir = [0.0] * Br
    out = {key: [] for key in ("yl", "vl", "al", "yr", "vr", "ar", "s")}

    s = 1.0
    k = 0
    while True:
        sum_l = 0.0
        for b in range(Bl):
            d = s - cenl[b]
            p = math.exp(-widl[b] * d * d)
            psil[b] = p
            sum_l += p
        sum_r = 0.0
        for b in range(Br):
            d = s - cenr[b]
            p = math.exp(-widr[b] * d * d)
            psir[b] = p
            sum_r += p

        clamped = False
        for c in range(nl):
            num = 0.0
            wr_ = WL[c]
            for b in range(Bl):
                num += psil[b] * wr_[b]
            f = num / sum_l * s * ampl[c]
            acc = (alpha_z_l * (beta_z_l * (gll[c] - yl[c]) - tau * vl[c]) + f) / tau2
            if has_limits and c < n_main:
                if acc > am[c]:
                    acc = am[c]
                    clamped = True
                elif acc < -am[c]:
                    acc = -am[c]
                    clamped = True
            al[c] = acc
        for c in range(nr):
            num = 0.0
            wr_ = WR[c]
            for b in range(Br):
                num += psir[b] * wr_[b]
            f = num / sum_r * s * ampr[c]
            acc = (alpha_z_r * (beta_z_r * (glr[c] - yr[c]) - tau * vr[c]) + f) / tau2
            if has_limits and c < n_main:
                if acc > am[c]:
                    acc = am[c]
                    clamped = True
                elif acc < -am[c]:
                    acc = -am[c]
                    clamped = True
            ar[c] = acc

        out["yl"].append(list(yl))
        out["vl"].append(list(vl))
        out["al"].append(list(al))
        out["yr"].append(list(yr))
        out["vr"].append(list(vr))
        out["ar"].append(list(ar))
        out["s"].append(s)

        if s <= s_min:
            vpeak = 0.0
            for c in range(nl):
                av = vl[c] if vl[c] >= 0.0 else -vl[c]
                if av > vpeak:
                    vpeak = av
            for c in range(nr):
                av = vr[c] if vr[c] >= 0.0 else -vr[c]
                if av > vpeak:
                    vpeak = av
            if vpeak <= stop_vel:
                settled = True
                for c in range(nl):
                    e = gll[c] - yl[c]
                    if e < 0.0:
                        e = -e
                    if e > toll[c]:
                        settled = False
                        break
                if settled:
                    for c in range(nr):
                        e = glr[c] - yr[c]
                        if e < 0.0:
                            e = -e
                        if e > tolr[c]:
                            settled = False
                            break
                if settled:
                    break

        if k + 1 >= max_steps:
            raise KernelError("step budget exhausted before settling", k)

        bad = False
        moved = False
        for c in range(nl):
            vn = vl[c] + al[c] * dt
            if has_limits and c < n_main:
                if vn > vm[c]:
                    vn = vm[c]
                    clamped = True
                elif vn < -vm[c]:
                    vn = -vm[c]
                    clamped = True
            yn = yl[c] + vn * dt
            if has_limits and c < n_main:
                if yn > hi[c]:
                    yn = hi[c]
                    vn = (yn - yl[c]) / dt
                    clamped = True
                elif yn < lo[c]:
                    yn = lo[c]
                    vn = (yn - yl[c]) / dt
                    clamped = True
            if vn != vl[c] or yn != yl[c]:
                moved = True
            vl[c] = vn
            yl[c] = yn
            if not (math.isfinite(vn) and math.isfinite(yn)):
                bad = True
        for c in range(nr):
            vn = vr[c] + ar[c] * dt
            if has_limits and c < n_main:
                if vn > vm[c]:
                    vn = vm[c]
                    clamped = True
                elif vn < -vm[c]:
                    vn = -vm[c]
                    clamped = True
            yn = yr[c] + vn * dt
            if has_limits and c < n_main:
                if yn > hi[c]:
                    yn = hi[c]
                    vn = (yn - yr[c]) / dt
                    clamped = True
                elif yn < lo[c]:
                    yn = lo[c]
                    vn = (yn - yr[c]) / dt
                    clamped = True
            if vn != vr[c] or yn != yr[c]:
                moved = True
            vr[c] = vn
            yr[c] = yn
            if not (math.isfinite(vn) and math.isfinite(yn)):
                bad = True
        k += 1
        if bad:
            raise KernelError("non-finite state at step %d" % k, k)

        dx = yl[0] - yr[0]
        dy = yl[1] - yr[1]
        dz = yl[2] - yr[2]
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist > d_max:
            half = 0.5 * (d_max / dist)
            mx = 0.5 * (yl[0] + yr[0])
            my = 0.5 * (yl[1] + yr[1])
            mz = 0.5 * (yl[2] + yr[2])
            yl[0] = mx + dx * half
            yl[1] = my + dy * half
            yl[2] = mz + dz * half
            yr[0] = mx - dx * half
            yr[1] = my - dy * half
            yr[2] = mz - dz * half

        # same deadlock escape as the single-arm stepper: a clamped step
        # that moved neither arm cannot benefit from time dilation
        if not clamped or not moved:
            s = s - (alpha_s * s / tau) * dt

    return (
        np.array(out["yl"], dtype=float),
        np.array(out["vl"], dtype=float),
        np.array(out["al"], dtype=float),
        np.array(out["yr"], dtype=float),
        np.array(out["vr"], dtype=float),
        np.array(out["ar"], dtype=float),
        np.array(out["s"], dtype=float),
    )
