"""Numba kernels for the hot loops: orbit iteration, ensemble burn-in,
hitting-time searches and Ulam bin sampling.

Maps are dispatched on an integer code so one compiled kernel serves all
presets; rovella parameters travel as the packed array
[rho, s, r, c0, c1]. The in-kernel random stream mirrors rng.Stream
word for word (checked in the tests), so results are identical whether
a draw happens in python or inside a kernel.

All kernels release the GIL; callers parallelize by splitting task index
ranges across threads, and every write lands at a slot owned by a single
task, so the thread count never changes a byte of output.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numba import uint64, float64, int64

MAP_ROVELLA_1D = 0
MAP_DOUBLING = 1
MAP_IDENTITY = 2

SINGULAR_EPS = 1e-300

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)
_U5 = uint64(5)
_U7 = uint64(7)
_U9 = uint64(9)
_U11 = uint64(11)
_U17 = uint64(17)
_U27 = uint64(27)
_U30 = uint64(30)
_U31 = uint64(31)
_U45 = uint64(45)
_U19 = uint64(19)
_U57 = uint64(57)
_U64 = uint64(64)
_INV_2_53 = 2.0 ** -53


@njit(uint64(uint64), cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


@njit(cache=True, nogil=True)
def init_stream(master_seed, task_index, state):
    """Fill the 4-word xoshiro256** state for stream (master, task)."""
    base = uint64(4) * uint64(task_index)
    for j in range(4):
        ctr = (base + uint64(j) + uint64(1)) * _GOLDEN
        state[j] = _mix64(uint64(master_seed) + ctr)


@njit(uint64(uint64[:]), cache=True, nogil=True)
def next_u64(state):
    s1 = state[1]
    result = ((s1 * _U5) << _U7 | (s1 * _U5) >> _U57) * _U9
    t = s1 << _U17
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = (state[3] << _U45) | (state[3] >> _U19)
    return result


@njit(float64(uint64[:]), cache=True, nogil=True)
def next_uniform(state):
    """Uniform double strictly inside (0, 1)."""
    return (float64(next_u64(state) >> _U11) + 0.5) * _INV_2_53


@njit(inline="always")
def _step_1d(code, par, x):
    if code == MAP_ROVELLA_1D:
        ax = abs(x)
        if ax < SINGULAR_EPS:
            return np.nan
        if x > 0.0:
            return -par[0] * ax ** par[1] + 0.5
        return par[0] * ax ** par[1] - 0.5
    if code == MAP_DOUBLING:
        y = 2.0 * x
        return y - np.floor(y)
    return x


@njit(inline="always")
def _step_2d(par, x, y):
    ax = abs(x)
    if ax < SINGULAR_EPS:
        return np.nan, np.nan
    fiber = y * ax ** par[2]
    if x > 0.0:
        return -par[0] * ax ** par[1] + 0.5, fiber + par[3]
    return par[0] * ax ** par[1] - 0.5, -fiber + par[4]


@njit(cache=True, nogil=True)
def orbit_1d(code, par, x0, burn_in, n, out):
    """Fill out[:n] with the orbit after burn_in steps.

    Returns the sample index at which the orbit reached the singular
    point (that sample and the rest are NaN), or -1 if it never did.
    """
    x = x0
    singular = code == MAP_ROVELLA_1D
    for _ in range(burn_in):
        if singular and abs(x) < SINGULAR_EPS:
            out[:] = np.nan
            return 0
        x = _step_1d(code, par, x)
    for k in range(n):
        if (singular and abs(x) < SINGULAR_EPS) or np.isnan(x):
            out[k:] = np.nan
            return k
        out[k] = x
        x = _step_1d(code, par, x)
    return -1


@njit(cache=True, nogil=True)
def orbit_2d(par, x0, y0, burn_in, n, out):
    x, y = x0, y0
    for _ in range(burn_in):
        if abs(x) < SINGULAR_EPS:
            out[:, :] = np.nan
            return 0
        x, y = _step_2d(par, x, y)
    for k in range(n):
        if abs(x) < SINGULAR_EPS or np.isnan(x):
            out[k:, :] = np.nan
            return k
        out[k, 0] = x
        out[k, 1] = y
        x, y = _step_2d(par, x, y)
    return -1


@njit(cache=True, nogil=True)
def seed_ensemble_1d(code, par, master_seed, start, stop, burn_in, lo, hi, xs):
    """Draw starts uniformly, burn each in, write final states to xs.

    Point m uses stream (master_seed, m); truncated orbits become NaN.
    """
    state = np.empty(4, dtype=np.uint64)
    for m in range(start, stop):
        init_stream(master_seed, m, state)
        x = lo + (hi - lo) * next_uniform(state)
        for _ in range(burn_in):
            x = _step_1d(code, par, x)
            if np.isnan(x):
                break
        xs[m] = x


@njit(cache=True, nogil=True)
def seed_ensemble_2d(par, master_seed, start, stop, burn_in, xs, ys):
    state = np.empty(4, dtype=np.uint64)
    for m in range(start, stop):
        init_stream(master_seed, m, state)
        x = -0.5 + next_uniform(state)
        y = -0.5 + next_uniform(state)
        for _ in range(burn_in):
            x, y = _step_2d(par, x, y)
            if np.isnan(x):
                break
        xs[m] = x
        ys[m] = y


@njit(cache=True, nogil=True)
def advance_ensemble_1d(code, par, xs, start, stop, steps):
    for m in range(start, stop):
        x = xs[m]
        if np.isnan(x):
            continue
        for _ in range(steps):
            x = _step_1d(code, par, x)
            if np.isnan(x):
                break
        xs[m] = x


@njit(cache=True, nogil=True)
def advance_ensemble_2d(par, xs, ys, start, stop, steps):
    for m in range(start, stop):
        x, y = xs[m], ys[m]
        if np.isnan(x):
            continue
        for _ in range(steps):
            x, y = _step_2d(par, x, y)
            if np.isnan(x):
                break
        xs[m] = x
        ys[m] = y


@njit(cache=True, nogil=True)
def expansion_recurrence_1d(code, par, log_rho_s, s_minus_1, x0, length,
                            c, delta, eps):
    """Expansion and recurrence time of one orbit, single pass.

    Returns (E, E_censored, R, R_censored, truncated). Censoring means no
    admissible N within the orbit length; values are then the length.
    """
    x = x0
    sum_e = 0.0
    sum_r = 0.0
    last_bad_e = 0
    last_bad_r = 0
    for n in range(1, length + 1):
        ax = abs(x)
        if ax < SINGULAR_EPS:
            return length, True, length, True, True
        sum_e += log_rho_s + s_minus_1 * np.log(ax)
        if sum_e <= c * n:
            last_bad_e = n
        if ax <= delta:
            sum_r += -np.log(ax)
        if sum_r >= eps * n:
            last_bad_r = n
        x = _step_1d(code, par, x)
    e_cens = last_bad_e == length
    r_cens = last_bad_r == length
    e_val = length if e_cens else last_bad_e + 1
    r_val = length if r_cens else last_bad_r + 1
    return e_val, e_cens, r_val, r_cens, False


@njit(cache=True, nogil=True)
def expansion_recurrence_batch(code, par, log_rho_s, s_minus_1, master_seed,
                               start, stop, length, c, delta, eps, lo, hi,
                               out_e, out_r, out_flags):
    """Per-orbit (E, R) over uniformly drawn starts; orbit i = stream i.

    out_flags bits: 1 = E censored, 2 = R censored, 4 = truncated.
    """
    state = np.empty(4, dtype=np.uint64)
    for i in range(start, stop):
        init_stream(master_seed, i, state)
        x0 = lo + (hi - lo) * next_uniform(state)
        e, ec, r, rc, tr = expansion_recurrence_1d(
            code, par, log_rho_s, s_minus_1, x0, length, c, delta, eps
        )
        out_e[i] = e
        out_r[i] = r
        out_flags[i] = (1 if ec else 0) | (2 if rc else 0) | (4 if tr else 0)


@njit(cache=True, nogil=True)
def hitting_1d(code, par, x, target, r, cap):
    """First n >= 1 with |T^n x - target| < r. Returns (n, censored, truncated)."""
    cur = x
    for n in range(1, cap + 1):
        cur = _step_1d(code, par, cur)
        if np.isnan(cur):
            return cap, True, True
        if abs(cur - target) < r:
            return n, False, False
    return cap, True, False


@njit(cache=True, nogil=True)
def hitting_2d(par, x, y, tx, ty, r, cap):
    cx, cy = x, y
    r2 = r * r
    for n in range(1, cap + 1):
        cx, cy = _step_2d(par, cx, cy)
        if np.isnan(cx):
            return cap, True, True
        dx = cx - tx
        dy = cy - ty
        if dx * dx + dy * dy < r2:
            return n, False, False
    return cap, True, False


@njit(cache=True, nogil=True)
def flow_hitting_2d(par, x, y, tx, ty, r, cap_time, inv_lambda1, t_glob,
                    unit_roof):
    """Accumulated roof time until the section orbit enters the ball.

    roof(x, y) = -log|x| / lambda1 + t_glob, or exactly 1 with unit_roof.
    A start already inside the ball returns 0 (infimum over t >= 0).
    Returns (flow_time, section_steps, censored, truncated).
    """
    cx, cy = x, y
    r2 = r * r
    dx = cx - tx
    dy = cy - ty
    if dx * dx + dy * dy < r2:
        return 0.0, 0, False, False
    t = 0.0
    n = 0
    while True:
        ax = abs(cx)
        if ax < SINGULAR_EPS:
            return cap_time, n, True, True
        if unit_roof:
            t += 1.0
        else:
            t += -np.log(ax) * inv_lambda1 + t_glob
        if t > cap_time:
            return cap_time, n, True, False
        cx, cy = _step_2d(par, cx, cy)
        n += 1
        if np.isnan(cx):
            return cap_time, n, True, True
        dx = cx - tx
        dy = cy - ty
        if dx * dx + dy * dy < r2:
            return t, n, False, False


@njit(cache=True, nogil=True)
def hitting_batch_2d(par, starts_x, starts_y, targets_x, targets_y, radii,
                     cap, out_time, out_flags, start, stop):
    """Map hitting times for records [start, stop). Flags: 1 censored, 2 truncated."""
    for i in range(start, stop):
        n, cens, tr = hitting_2d(par, starts_x[i], starts_y[i], targets_x[i],
                                 targets_y[i], radii[i], cap)
        out_time[i] = n
        out_flags[i] = (1 if cens else 0) | (2 if tr else 0)


@njit(cache=True, nogil=True)
def flow_hitting_batch_2d(par, starts_x, starts_y, targets_x, targets_y,
                          radii, cap_time, inv_lambda1, t_glob, unit_roof,
                          out_time, out_flags, start, stop):
    for i in range(start, stop):
        t, _, cens, tr = flow_hitting_2d(par, starts_x[i], starts_y[i],
                                         targets_x[i], targets_y[i], radii[i],
                                         cap_time, inv_lambda1, t_glob,
                                         unit_roof)
        out_time[i] = t
        out_flags[i] = (1 if cens else 0) | (2 if tr else 0)


@njit(cache=True, nogil=True)
def ulam_targets(code, par, edges, spb, master_seed, rows, cols, weights):
    """Stratified transition sampling for the Ulam matrix.

    Bin i draws from stream (master_seed, i). A bin straddling zero is
    split there first: each half gets spb stratified samples weighted by
    its share of the bin, keeping rows exactly stochastic. Returns the
    number of (row, col, weight) entries written.
    """
    n = edges.size - 1
    lo = edges[0]
    hi = edges[n]
    width = hi - lo
    state = np.empty(4, dtype=np.uint64)
    k = 0
    for i in range(n):
        init_stream(master_seed, i, state)
        a = edges[i]
        b = edges[i + 1]
        if a < 0.0 < b:
            n_halves = 2
        else:
            n_halves = 1
        for half in range(n_halves):
            if n_halves == 2:
                ha = a if half == 0 else 0.0
                hb = 0.0 if half == 0 else b
                w = ((hb - ha) / (b - a)) / spb
            else:
                ha, hb = a, b
                w = 1.0 / spb
            for sidx in range(spb):
                u = (sidx + next_uniform(state)) / spb
                x = ha + (hb - ha) * u
                y = _step_1d(code, par, x)
                if np.isnan(y):
                    continue
                j = int64((y - lo) / width * n)
                if j < 0:
                    j = 0
                if j >= n:
                    j = n - 1
                rows[k] = i
                cols[k] = j
                weights[k] = w
                k += 1
    return k


@njit(cache=True, nogil=True)
def log_deriv_sum_orbit(code, par, log_rho_s, s_minus_1, x0, n):
    """Birkhoff sum of log|T'| over n steps from x0 (rovella map)."""
    x = x0
    total = 0.0
    for _ in range(n):
        ax = abs(x)
        if ax < SINGULAR_EPS:
            return np.nan
        total += log_rho_s + s_minus_1 * np.log(ax)
        x = _step_1d(code, par, x)
    return total / n
