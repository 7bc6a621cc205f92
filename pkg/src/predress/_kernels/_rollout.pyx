# cython: boundscheck=False, wraparound=False, cdivision=False, language_level=3
"""Compiled rollout steppers.

Loop-for-loop mirror of `pure.py`; both backends must produce bit-identical
trajectories.  Any change there must be copied here.
"""

import numpy as np

from libc.math cimport exp, sqrt, isfinite

from predress._kernels.pure import KernelError


cdef inline double[:, ::1] _grow2(object chunks, double[:, ::1] buf, int n):
    chunks.append(np.asarray(buf).copy())
    cdef double[:, ::1] fresh = np.empty((buf.shape[0], n), dtype=np.float64)
    return fresh


def run_single(
    weights,
    centers,
    widths,
    amp,
    y_start,
    goal,
    double alpha_z,
    double beta_z,
    double alpha_s,
    double tau,
    double dt,
    int n_main,
    bint has_limits,
    pos_lo,
    pos_hi,
    vel_max,
    acc_max,
    double s_min,
    double stop_vel,
    goal_tol,
    long max_steps,
):
    cdef double[:, ::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] cen = np.ascontiguousarray(centers, dtype=np.float64)
    cdef double[::1] wid = np.ascontiguousarray(widths, dtype=np.float64)
    cdef double[::1] ampl = np.ascontiguousarray(amp, dtype=np.float64)
    cdef double[::1] gl = np.ascontiguousarray(goal, dtype=np.float64)
    cdef double[::1] tol = np.ascontiguousarray(goal_tol, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(pos_lo, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(pos_hi, dtype=np.float64)
    cdef double[::1] vm = np.ascontiguousarray(vel_max, dtype=np.float64)
    cdef double[::1] am = np.ascontiguousarray(acc_max, dtype=np.float64)
    cdef int n = ampl.shape[0]
    cdef int B = cen.shape[0]
    cdef double tau2 = tau * tau

    cdef double[::1] y = np.array(y_start, dtype=np.float64)
    cdef double[::1] v = np.zeros(n, dtype=np.float64)
    cdef double[::1] a = np.zeros(n, dtype=np.float64)
    cdef double[::1] psi = np.zeros(B, dtype=np.float64)

    cdef int cap = 4096
    y_chunks = []
    v_chunks = []
    a_chunks = []
    s_chunks = []
    cdef double[:, ::1] buf_y = np.empty((cap, n), dtype=np.float64)
    cdef double[:, ::1] buf_v = np.empty((cap, n), dtype=np.float64)
    cdef double[:, ::1] buf_a = np.empty((cap, n), dtype=np.float64)
    cdef double[::1] buf_s = np.empty(cap, dtype=np.float64)
    cdef int fill = 0

    cdef double s = 1.0
    cdef long k = 0
    cdef int b, c
    cdef double d, p, sum_psi, num, f, acc, vn, yn, vpeak, av, e
    cdef bint clamped, settled, bad, moved

    while True:
        sum_psi = 0.0
        for b in range(B):
            d = s - cen[b]
            p = exp(-wid[b] * d * d)
            psi[b] = p
            sum_psi += p
        clamped = False
        for c in range(n):
            num = 0.0
            for b in range(B):
                num += psi[b] * W[c, b]
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

        if fill == cap:
            buf_y = _grow2(y_chunks, buf_y, n)
            buf_v = _grow2(v_chunks, buf_v, n)
            buf_a = _grow2(a_chunks, buf_a, n)
            s_chunks.append(np.asarray(buf_s).copy())
            buf_s = np.empty(cap, dtype=np.float64)
            fill = 0
        for c in range(n):
            buf_y[fill, c] = y[c]
            buf_v[fill, c] = v[c]
            buf_a[fill, c] = a[c]
        buf_s[fill] = s
        fill += 1

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
            if not (isfinite(vn) and isfinite(yn)):
                bad = True
        k += 1
        if bad:
            raise KernelError("non-finite state at step %d" % k, k)
        # Phase stopping dilates time while a clamp is active, but a step
        # that changed nothing (state pinned at a position bound) would
        # dilate forever; advancing the phase is the only way forward.
        if not clamped or not moved:
            s = s - (alpha_s * s / tau) * dt

    y_chunks.append(np.asarray(buf_y[:fill]).copy())
    v_chunks.append(np.asarray(buf_v[:fill]).copy())
    a_chunks.append(np.asarray(buf_a[:fill]).copy())
    s_chunks.append(np.asarray(buf_s[:fill]).copy())
    return (
        np.concatenate(y_chunks, axis=0),
        np.concatenate(v_chunks, axis=0),
        np.concatenate(a_chunks, axis=0),
        np.concatenate(s_chunks, axis=0),
    )


def run_pair(
    weights_l,
    centers_l,
    widths_l,
    amp_l,
    y_start_l,
    goal_l,
    double alpha_z_l,
    double beta_z_l,
    weights_r,
    centers_r,
    widths_r,
    amp_r,
    y_start_r,
    goal_r,
    double alpha_z_r,
    double beta_z_r,
    double alpha_s,
    double tau,
    double dt,
    int n_main,
    bint has_limits,
    pos_lo,
    pos_hi,
    vel_max,
    acc_max,
    double d_max,
    double s_min,
    double stop_vel,
    goal_tol_l,
    goal_tol_r,
    long max_steps,
):
    cdef double[:, ::1] WL = np.ascontiguousarray(weights_l, dtype=np.float64)
    cdef double[:, ::1] WR = np.ascontiguousarray(weights_r, dtype=np.float64)
    cdef double[::1] cenl = np.ascontiguousarray(centers_l, dtype=np.float64)
    cdef double[::1] widl = np.ascontiguousarray(widths_l, dtype=np.float64)
    cdef double[::1] cenr = np.ascontiguousarray(centers_r, dtype=np.float64)
    cdef double[::1] widr = np.ascontiguousarray(widths_r, dtype=np.float64)
    cdef double[::1] ampl = np.ascontiguousarray(amp_l, dtype=np.float64)
    cdef double[::1] ampr = np.ascontiguousarray(amp_r, dtype=np.float64)
    cdef double[::1] gll = np.ascontiguousarray(goal_l, dtype=np.float64)
    cdef double[::1] glr = np.ascontiguousarray(goal_r, dtype=np.float64)
    cdef double[::1] toll = np.ascontiguousarray(goal_tol_l, dtype=np.float64)
    cdef double[::1] tolr = np.ascontiguousarray(goal_tol_r, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(pos_lo, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(pos_hi, dtype=np.float64)
    cdef double[::1] vm = np.ascontiguousarray(vel_max, dtype=np.float64)
    cdef double[::1] am = np.ascontiguousarray(acc_max, dtype=np.float64)
    cdef int nl = ampl.shape[0]
    cdef int nr = ampr.shape[0]
    cdef int Bl = cenl.shape[0]
    cdef int Br = cenr.shape[0]
    cdef double tau2 = tau * tau

    cdef double[::1] yl = np.array(y_start_l, dtype=np.float64)
    cdef double[::1] yr = np.array(y_start_r, dtype=np.float64)
    cdef double[::1] vl = np.zeros(nl, dtype=np.float64)
    cdef double[::1] vr = np.zeros(nr, dtype=np.float64)
    cdef double[::1] al = np.zeros(nl, dtype=np.float64)
    cdef double[::1] ar = np.zeros(nr, dtype=np.float64)
    cdef double[::1] psil = np.zeros(Bl, dtype=np.float64)
    cdef double[::1] psir = np.zeros(Br, dtype=np.float64)

    cdef int cap = 4096
    yl_chunks = []
    vl_chunks = []
    al_chunks = []
    yr_chunks = []
    vr_chunks = []
    ar_chunks = []
    s_chunks = []
    cdef double[:, ::1] buf_yl = np.empty((cap, nl), dtype=np.float64)
    cdef double[:, ::1] buf_vl = np.empty((cap, nl), dtype=np.float64)
    cdef double[:, ::1] buf_al = np.empty((cap, nl), dtype=np.float64)
    cdef double[:, ::1] buf_yr = np.empty((cap, nr), dtype=np.float64)
    cdef double[:, ::1] buf_vr = np.empty((cap, nr), dtype=np.float64)
    cdef double[:, ::1] buf_ar = np.empty((cap, nr), dtype=np.float64)
    cdef double[::1] buf_s = np.empty(cap, dtype=np.float64)
    cdef int fill = 0

    cdef double s = 1.0
    cdef long k = 0
    cdef int b, c
    cdef double d, p, sum_l, sum_r, num, f, acc, vn, yn, vpeak, av, e
    cdef double dx, dy, dz, dist, half, mx, my, mz
    cdef bint clamped, settled, bad, moved

    while True:
        sum_l = 0.0
        for b in range(Bl):
            d = s - cenl[b]
            p = exp(-widl[b] * d * d)
            psil[b] = p
            sum_l += p
        sum_r = 0.0
        for b in range(Br):
            d = s - cenr[b]
            p = exp(-widr[b] * d * d)
            psir[b] = p
            sum_r += p

        clamped = False
        for c in range(nl):
            num = 0.0
            for b in range(Bl):
                num += psil[b] * WL[c, b]
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
            for b in range(Br):
                num += psir[b] * WR[c, b]
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

        if fill == cap:
            buf_yl = _grow2(yl_chunks, buf_yl, nl)
            buf_vl = _grow2(vl_chunks, buf_vl, nl)
            buf_al = _grow2(al_chunks, buf_al, nl)
            buf_yr = _grow2(yr_chunks, buf_yr, nr)
            buf_vr = _grow2(vr_chunks, buf_vr, nr)
            buf_ar = _grow2(ar_chunks, buf_ar, nr)
            s_chunks.append(np.asarray(buf_s).copy())
            buf_s = np.empty(cap, dtype=np.float64)
            fill = 0
        for c in range(nl):
            buf_yl[fill, c] = yl[c]
            buf_vl[fill, c] = vl[c]
            buf_al[fill, c] = al[c]
        for c in range(nr):
            buf_yr[fill, c] = yr[c]
            buf_vr[fill, c] = vr[c]
            buf_ar[fill, c] = ar[c]
        buf_s[fill] = s
        fill += 1

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
            if not (isfinite(vn) and isfinite(yn)):
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
            if not (isfinite(vn) and isfinite(yn)):
                bad = True
        k += 1
        if bad:
            raise KernelError("non-finite state at step %d" % k, k)

        dx = yl[0] - yr[0]
        dy = yl[1] - yr[1]
        dz = yl[2] - yr[2]
        dist = sqrt(dx * dx + dy * dy + dz * dz)
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

    yl_chunks.append(np.asarray(buf_yl[:fill]).copy())
    vl_chunks.append(np.asarray(buf_vl[:fill]).copy())
    al_chunks.append(np.asarray(buf_al[:fill]).copy())
    yr_chunks.append(np.asarray(buf_yr[:fill]).copy())
    vr_chunks.append(np.asarray(buf_vr[:fill]).copy())
    ar_chunks.append(np.asarray(buf_ar[:fill]).copy())
    s_chunks.append(np.asarray(buf_s[:fill]).copy())
    return (
        np.concatenate(yl_chunks, axis=0),
        np.concatenate(vl_chunks, axis=0),
        np.concatenate(al_chunks, axis=0),
        np.concatenate(yr_chunks, axis=0),
        np.concatenate(vr_chunks, axis=0),
        np.concatenate(ar_chunks, axis=0),
        np.concatenate(s_chunks, axis=0),
    )
