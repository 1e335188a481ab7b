"""Numba kernels for the Monte Carlo engines.

Every path owns a counter-based Philox4x32-10 stream: the key is derived from
the run seed, the upper counter words hold the path index and the lower words
count draws.  A path's trajectory therefore depends only on ``(seed, path)``,
never on chunking, worker count or the requested horizon.

Kernels write one result per path into caller-owned arrays and release the
GIL, so chunks can run on a thread pool.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# Bridge crossings with probability below exp(-40) ~ 4e-18 are ignored and
# consume no uniform.
_EXP_CUTOFF = 40.0

# Distribution component kinds for the general walk kernel.
KIND_NONE = 0
KIND_TWOPOINT = 1
KIND_GAUSSIAN = 2

# Walk outcome codes.
SURVIVED = 0
RUINED = 1
CENSORED = -1


@numba.njit(inline="always", cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * np.uint64(c0)
        p1 = _M1 * np.uint64(c2)
        n0 = np.uint32(p1 >> _S32) ^ c1 ^ k0
        n1 = np.uint32(p1 & _MASK32)
        n2 = np.uint32(p0 >> _S32) ^ c3 ^ k1
        n3 = np.uint32(p0 & _MASK32)
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = np.uint32(k0 + _W0)
        k1 = np.uint32(k1 + _W1)
    return c0, c1, c2, c3


@numba.njit(cache=True)
def philox_block(c0, c1, c2, c3, k0, k1):
    """Raw Philox4x32-10 output, exposed for known-answer tests."""
    return philox4x32(
        np.uint32(c0), np.uint32(c1), np.uint32(c2), np.uint32(c3),
        np.uint32(k0), np.uint32(k1),
    )


@numba.njit(inline="always", cache=True)
def _u64_pair(k0, k1, path, ctr):
    a, b, c, d = philox4x32(
        np.uint32(np.uint64(ctr) & _MASK32),
        np.uint32(np.uint64(ctr) >> _S32),
        np.uint32(np.uint64(path) & _MASK32),
        np.uint32(np.uint64(path) >> _S32),
        k0,
        k1,
    )
    return (np.uint64(a) << _S32) | np.uint64(b), (np.uint64(c) << _S32) | np.uint64(d)


@numba.njit(inline="always", cache=True)
def _next_u64(k0, k1, path, ctr, spare, has_spare):
    """Next 64 random bits of a path stream; state is ``(ctr, spare, has_spare)``."""
    if has_spare:
        return spare, ctr, np.uint64(0), False
    r1, r2 = _u64_pair(k0, k1, path, ctr)
    return r1, ctr + 1, r2, True


@numba.njit(inline="always", cache=True)
def _to_unit(r):
    # Open interval (0, 1): safe for log.
    return (np.int64(r >> _S11) + 0.5) * _INV53


@numba.njit(inline="always", cache=True)
def _next_uniform(k0, k1, path, ctr, spare, has_spare):
    r, ctr, spare, has_spare = _next_u64(k0, k1, path, ctr, spare, has_spare)
    return _to_unit(r), ctr, spare, has_spare


def _ziggurat_tables():
    """256-layer ziggurat tables for the standard normal (52-bit abscissae)."""
    r = 3.6541528853610088
    v = 0.00492867323399
    m1 = 2.0 ** 52
    ki = np.zeros(256, np.uint64)
    wi = np.zeros(256)
    fi = np.zeros(256)
    dn = tn = r
    q = v / np.exp(-0.5 * dn * dn)
    ki[0] = np.uint64((dn / q) * m1)
    ki[1] = 0
    wi[0] = q / m1
    wi[255] = dn / m1
    fi[0] = 1.0
    fi[255] = np.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = np.sqrt(-2.0 * np.log(v / dn + np.exp(-0.5 * dn * dn)))
        ki[i + 1] = np.uint64((dn / tn) * m1)
        tn = dn
        fi[i] = np.exp(-0.5 * dn * dn)
        wi[i] = dn / m1
    return ki, wi, fi, r


_ZIG_K, _ZIG_W, _ZIG_F, _ZIG_R = _ziggurat_tables()
_ZIG_INV_R = 1.0 / _ZIG_R
_M52 = np.uint64(0x000FFFFFFFFFFFFF)
_U1 = np.uint64(1)
_U8 = np.uint64(8)
_U9 = np.uint64(9)
_U255 = np.uint64(0xFF)


@numba.njit(inline="always", cache=True)
def _next_normal(k0, k1, path, ctr, spare, has):
    """Standard normal draw by the ziggurat method."""
    while True:
        r, ctr, spare, has = _next_u64(k0, k1, path, ctr, spare, has)
        idx = np.int64(r & _U255)
        sign = (r >> _U8) & _U1
        rabs = (r >> _U9) & _M52
        x = np.int64(rabs) * _ZIG_W[idx]
        if sign:
            x = -x
        if rabs < _ZIG_K[idx]:
            return x, ctr, spare, has
        if idx == 0:
            # Base strip: sample the tail beyond r.
            while True:
                r, ctr, spare, has = _next_u64(k0, k1, path, ctr, spare, has)
                xx = -_ZIG_INV_R * math.log(_to_unit(r))
                r, ctr, spare, has = _next_u64(k0, k1, path, ctr, spare, has)
                yy = -math.log(_to_unit(r))
                if yy + yy > xx * xx:
                    t = _ZIG_R + xx
                    return (-t if sign else t), ctr, spare, has
        else:
            r, ctr, spare, has = _next_u64(k0, k1, path, ctr, spare, has)
            if (_ZIG_F[idx - 1] - _ZIG_F[idx]) * _to_unit(r) + _ZIG_F[idx] < math.exp(-0.5 * x * x):
                return x, ctr, spare, has


@numba.njit(cache=True)
def normal_stream(k0, k1, path, n):
    """First ``n`` normals of one path stream (for distribution tests)."""
    out = np.empty(n)
    ctr = np.int64(0)
    spare = np.uint64(0)
    has = False
    for i in range(n):
        z, ctr, spare, has = _next_normal(k0, k1, path, ctr, spare, has)
        out[i] = z
    return out


@numba.njit(cache=True)
def uniform_stream(k0, k1, path, n):
    """First ``n`` uniforms of one path stream, in consumption order."""
    out = np.empty(n)
    ctr = np.int64(0)
    spare = np.uint64(0)
    has = False
    for i in range(n):
        u, ctr, spare, has = _next_uniform(k0, k1, path, ctr, spare, has)
        out[i] = u
    return out


@numba.njit(nogil=True, cache=True)
def walk_paths(k0, k1, start, x, k, kinds, signs, par_a, par_b, max_steps,
               status, steps):
    """Random walks from ``x`` absorbed at ``<= 0`` or ``>= k``.

    Each step is ``sum_j signs[j] * component_j`` where a two-point component
    is +1 with probability ``par_a[j]`` (else -1) and a Gaussian component is
    ``par_a[j] + par_b[j] * Z``.
    """
    n = status.size
    ncomp = kinds.size
    for i in range(n):
        path = start + i
        ctr = np.int64(0)
        spare = np.uint64(0)
        has = False
        s = x
        m = 0
        outcome = CENSORED
        while m < max_steps:
            inc = 0.0
            for j in range(ncomp):
                kind = kinds[j]
                if kind == KIND_NONE:
                    continue
                if kind == KIND_TWOPOINT:
                    u, ctr, spare, has = _next_uniform(k0, k1, path, ctr, spare, has)
                    v = 1.0 if u < par_a[j] else -1.0
                else:
                    z, ctr, spare, has = _next_normal(k0, k1, path, ctr, spare, has)
                    v = par_a[j] + par_b[j] * z
                inc += signs[j] * v
            s += inc
            m += 1
            if s <= 0.0:
                outcome = RUINED
                break
            if s >= k:
                outcome = SURVIVED
                break
        status[i] = outcome
        steps[i] = m


@numba.njit(inline="always", cache=True)
def _bm_step(k0, k1, path, ctr, spare, has, y, drift, sd, inv_var2):
    """One exact Gaussian step of drifted BM with Brownian-bridge barrier test.

    Returns ``(hit, y_next, ctr, spare, has)``.
    """
    z, ctr, spare, has = _next_normal(k0, k1, path, ctr, spare, has)
    y1 = y + drift + sd * z
    if y1 <= 0.0:
        return True, y1, ctr, spare, has
    arg = inv_var2 * y * y1
    if arg < _EXP_CUTOFF:
        u, ctr, spare, has = _next_uniform(k0, k1, path, ctr, spare, has)
        # exp(-arg) <= 1 / (1 + arg): most draws are rejected without exp.
        if u * (1.0 + arg) <= 1.0 and u < math.exp(-arg):
            return True, y1, ctr, spare, has
    return False, y1, ctr, spare, has


@numba.njit(nogil=True, cache=True)
def passage_paths(k0, k1, start, a, mu, sigma, dt, max_steps, out):
    """First passage times of ``a + mu t + sigma B(t)`` to 0 (NaN if censored)."""
    drift = mu * dt
    sd = sigma * math.sqrt(dt)
    inv_var2 = 2.0 / (sigma * sigma * dt)
    for i in range(out.size):
        path = start + i
        ctr = np.int64(0)
        spare = np.uint64(0)
        has = False
        y = a
        t = np.nan
        if y <= 0.0:
            t = 0.0
        else:
            for m in range(max_steps):
                hit, y, ctr, spare, has = _bm_step(
                    k0, k1, path, ctr, spare, has, y, drift, sd, inv_var2)
                if hit:
                    t = (m + 0.5) * dt
                    break
        out[i] = t


@numba.njit(nogil=True, cache=True)
def alm_paths(k0, k1, start, a, mu, sigma, restart, rate, horizon, dt,
              discounted, events):
    """Restart scheme: per path, sum of ``exp(-rate * T_n)`` over hits ``T_n <= horizon``."""
    drift = mu * dt
    sd = sigma * math.sqrt(dt)
    inv_var2 = 2.0 / (sigma * sigma * dt)
    half = 0.5 * dt
    for i in range(discounted.size):
        path = start + i
        ctr = np.int64(0)
        spare = np.uint64(0)
        has = False
        y = a
        t = 0.0
        total = 0.0
        count = 0
        while t < horizon:
            hit, y1, ctr, spare, has = _bm_step(
                k0, k1, path, ctr, spare, has, y, drift, sd, inv_var2)
            if hit:
                tn = t + half
                if tn > horizon:
                    break
                total += math.exp(-rate * tn)
                count += 1
                t = tn
                y = restart
            else:
                t += dt
                y = y1
        discounted[i] = total
        events[i] = count


@numba.njit(nogil=True, cache=True)
def alm_single(k0, k1, path, a, mu, sigma, restart, horizon, dt, record):
    """One restart-scheme path: hit times, and the visited (t, y) grid if ``record``."""
    drift = mu * dt
    sd = sigma * math.sqrt(dt)
    inv_var2 = 2.0 / (sigma * sigma * dt)
    half = 0.5 * dt
    # Time advances by at least dt/2 per step.
    cap = int(2.0 * horizon / dt) + 4
    times = np.empty(cap)
    grid_t = np.empty(cap if record else 1)
    grid_y = np.empty(cap if record else 1)
    nev = 0
    ng = 0
    ctr = np.int64(0)
    spare = np.uint64(0)
    has = False
    y = a
    t = 0.0
    if record:
        grid_t[0] = t
        grid_y[0] = y
        ng = 1
    while t < horizon:
        hit, y1, ctr, spare, has = _bm_step(
            k0, k1, path, ctr, spare, has, y, drift, sd, inv_var2)
        if hit:
            tn = t + half
            if tn > horizon:
                break
            times[nev] = tn
            nev += 1
            t = tn
            y = restart
        else:
            t += dt
            y = y1
        if record:
            grid_t[ng] = t
            grid_y[ng] = y
            ng += 1
    return times[:nev].copy(), grid_t[:ng].copy(), grid_y[:ng].copy()
