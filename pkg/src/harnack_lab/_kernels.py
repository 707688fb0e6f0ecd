"""Hot Monte Carlo loops for the lamplighter experiments.

Each kernel is a plain Python function over numpy scalars and arrays,
JIT-compiled with numba unless the environment variable
``HARNACK_LAB_DISABLE_NUMBA=1`` selects the pure-numpy fallback.  Both paths
consume the same ``np.random.Generator`` streams and execute the same
statements, so results are bit-identical across backends (asserted by tests
and exercised by ``benchmarks/bench_kernels.py``).

State layout: a walker is (position, lamp array, m, M) where the lamp array
is indexed by ``offset + site`` and (m, M) are the extreme lit sites, with
m > M encoding "no lamp lit".
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("HARNACK_LAB_DISABLE_NUMBA", "") == "1"
BACKEND = "numpy" if NUMBA_DISABLED else "numba"


def walk_distance(pos, m, M):
    """Word distance of (pos, lamps) from the base state, lamps given by extremes.

    Minimum over the two sweep orders of (travel to cover [t_left, t_right] and
    stop at pos), plus a 2-step bounce when the walk would otherwise end on a
    lit extreme without ever leaving it.
    """
    if m > M:
        return pos if pos >= 0 else -pos
    t_left = 0
    if pos < t_left:
        t_left = pos
    if m < t_left:
        t_left = m
    t_right = 0
    if pos > t_right:
        t_right = pos
    if M > t_right:
        t_right = M
    if t_left == 0 and t_right == 0:
        return 2
    left_first = -t_left + (t_right - t_left) + (t_right - pos)
    if pos == t_right and pos == M and pos > 0:
        left_first += 2
    right_first = t_right + (t_right - t_left) + (pos - t_left)
    if pos == t_left and pos == m and pos < 0:
        right_first += 2
    return left_first if left_first < right_first else right_first


def set_lamp(lamps, off, pos, value, m, M):
    """Write one lamp and return the updated extreme lit sites."""
    idx = off + pos
    old = lamps[idx]
    if value == old:
        return m, M
    lamps[idx] = value
    if value == 1:
        if m > M:
            return pos, pos
        if pos < m:
            return pos, M
        if pos > M:
            return m, pos
        return m, M
    if pos == m and pos == M:
        return 1, 0  # set emptied
    if pos == m:
        mm = m + 1
        while lamps[off + mm] == 0:
            mm += 1
        return mm, M
    if pos == M:
        mm = M - 1
        while lamps[off + mm] == 0:
            mm -= 1
        return m, mm
    return m, M


def scan_extremes(lamps, off):
    m = 1
    M = 0
    for k in range(lamps.shape[0]):
        if lamps[k] == 1:
            p = k - off
            if m > M:
                m = p
            M = p
    return m, M


def osc_block(rng, n_trials, sign, R, KR, win_lo, win_hi, step_cap,
              out_g, out_steps, out_capped):
    """Discrete switch-then-walk trials until the distance exceeds KR.

    Start: position sign*R with the lamps on [-R,0] (sign<0) or [0,R] (sign>0)
    lit.  Records whether some lamp in [win_lo, win_hi] is lit at the exit
    state.  Capped trials record no event and are flagged.
    """
    off = KR + 3
    size = 2 * off + 1
    for i in range(n_trials):
        lamps = np.zeros(size, dtype=np.uint8)
        if sign < 0:
            for s in range(-R, 1):
                lamps[off + s] = 1
            m, M = -R, 0
        else:
            for s in range(0, R + 1):
                lamps[off + s] = 1
            m, M = 0, R
        pos = sign * R
        steps = 0
        capped = 0
        while True:
            if walk_distance(pos, m, M) > KR:
                break
            if steps >= step_cap:
                capped = 1
                break
            value = 1 if rng.random() < 0.5 else 0
            m, M = set_lamp(lamps, off, pos, value, m, M)
            pos = pos + 1 if rng.random() < 0.5 else pos - 1
            steps += 1
        hit = 0
        if capped == 0:
            for s in range(win_lo, win_hi + 1):
                if lamps[off + s] == 1:
                    hit = 1
                    break
        out_g[i] = hit
        out_steps[i] = steps
        out_capped[i] = capped


def couple_block(rng, n_trials, p1_init, p2_init, l1_template, l2_template, off,
                 exit_radius, window_lo, window_hi, step_cap,
                 out_success, out_tau_c, out_tau_e, out_stayed, out_maxd,
                 out_capped, out_first_dir, out_first_time, out_events):
    """Coupled continuous-time walks until full-state coupling or exit.

    Three regimes: while positions differ, independent exponential clocks (one
    walker moves per event, so the position difference changes by one); after
    positions meet, shared moves and shared lamp randomizations; after the
    full states agree, a single walk continues to the exit time.  Records the
    coupling and exit times, whether positions stayed inside
    [window_lo, window_hi] up to coupling, and the maximum distance from the
    base point seen before coupling.
    """
    size = l1_template.shape[0]
    for i in range(n_trials):
        l1 = l1_template.copy()
        l2 = l2_template.copy()
        m1, M1 = scan_extremes(l1, off)
        m2, M2 = scan_extremes(l2, off)
        diff = 0
        for k in range(size):
            if l1[k] != l2[k]:
                diff += 1
        p1 = p1_init
        p2 = p2_init
        t = 0.0
        tau_c = -1.0
        tau_e = -1.0
        stayed = 1
        maxd = 0
        capped = 0
        first_dir = 0
        first_time = -1.0
        events = 0
        while True:
            d1 = walk_distance(p1, m1, M1)
            d2 = walk_distance(p2, m2, M2)
            dmax = d1 if d1 > d2 else d2
            if tau_c < 0.0:
                if dmax > maxd:
                    maxd = dmax
                if p1 < window_lo or p1 > window_hi or p2 < window_lo or p2 > window_hi:
                    stayed = 0
                if p1 == p2 and diff == 0:
                    tau_c = t
            if d1 > exit_radius or d2 > exit_radius:
                tau_e = t
                break
            if events >= step_cap:
                capped = 1
                break
            events += 1
            if tau_c >= 0.0:
                # fully coupled: one walk carries both copies to the exit
                t += rng.exponential(1.0)
                value = 1 if rng.random() < 0.5 else 0
                m1, M1 = set_lamp(l1, off, p1, value, m1, M1)
                m2, M2 = set_lamp(l2, off, p2, value, m2, M2)
                step = 1 if rng.random() < 0.5 else -1
                if first_time < 0.0:
                    first_time = t
                    first_dir = step
                p1 += step
                p2 += step
            elif p1 != p2:
                # independent clocks: rate-2 superposition, fair thinning
                t += rng.exponential(0.5)
                if rng.random() < 0.5:
                    value = 1 if rng.random() < 0.5 else 0
                    idx = off + p1
                    was = l1[idx] != l2[idx]
                    m1, M1 = set_lamp(l1, off, p1, value, m1, M1)
                    if (l1[idx] != l2[idx]) != was:
                        diff += 1 if not was else -1
                    step = 1 if rng.random() < 0.5 else -1
                    if first_time < 0.0:
                        first_time = t
                        first_dir = step
                    p1 += step
                else:
                    value = 1 if rng.random() < 0.5 else 0
                    idx = off + p2
                    was = l1[idx] != l2[idx]
                    m2, M2 = set_lamp(l2, off, p2, value, m2, M2)
                    if (l1[idx] != l2[idx]) != was:
                        diff += 1 if not was else -1
                    step = 1 if rng.random() < 0.5 else -1
                    p2 += step
            else:
                # positions equal, some lamps differ: shared moves and coins
                t += rng.exponential(1.0)
                value = 1 if rng.random() < 0.5 else 0
                idx = off + p1
                was = l1[idx] != l2[idx]
                m1, M1 = set_lamp(l1, off, p1, value, m1, M1)
                m2, M2 = set_lamp(l2, off, p2, value, m2, M2)
                if was:
                    diff -= 1
                step = 1 if rng.random() < 0.5 else -1
                if first_time < 0.0:
                    first_time = t
                    first_dir = step
                p1 += step
                p2 += step
        success = 1 if (tau_c >= 0.0 and (tau_e < 0.0 or tau_c < tau_e)) else 0
        out_success[i] = success
        out_tau_c[i] = tau_c
        out_tau_e[i] = tau_e
        out_stayed[i] = stayed
        out_maxd[i] = maxd
        out_capped[i] = capped
        out_first_dir[i] = first_dir
        out_first_time[i] = first_time
        out_events[i] = events


if not NUMBA_DISABLED:
    from numba import njit

    _jit = njit(cache=True, nogil=True)
    walk_distance = _jit(walk_distance)
    set_lamp = _jit(set_lamp)
    scan_extremes = _jit(scan_extremes)
    osc_block = _jit(osc_block)
    couple_block = _jit(couple_block)
