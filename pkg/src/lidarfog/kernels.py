"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

The public names at the bottom of the module (``mie_sums``, ``soft_power``,
``augment_points``) are bound to one flavour according to
:data:`lidarfog._accel.BACKEND`. Both flavours stay importable so tests and
the benchmark can compare them directly.
"""

import math

import numpy as np

from lidarfog._accel import HAVE_NUMBA, USE_NUMBA

if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


RETAINED = 0
SCATTERED = 1
DROPPED = 2

# downward D_n recurrence starts this many orders above max(n_stop, |m x|)
DN_PAD = 15
_LENTZ_TOL = 1e-12
_LENTZ_MAXITER = 100_000


# --------------------------------------------------------------------------
# Mie series
# --------------------------------------------------------------------------


@njit(cache=True)
def n_terms(x):
    """Wiscombe truncation order ceil(x + 4 x^(1/3) + 2)."""
    return int(math.ceil(x + 4.0 * x ** (1.0 / 3.0) + 2.0))


@njit(cache=True)
def _lentz_dn(z, n):
    # Logarithmic derivative D_n(z) by Lentz's continued fraction; seeds the
    # downward recurrence so its start order need not be far above |z|.
    zinv = 2.0 / z
    alpha = (n + 0.5) * zinv
    aj = -(n + 1.5) * zinv
    num = aj + 1.0 / alpha
    den = aj
    ratio = num / den
    run = alpha * ratio
    it = 0
    while abs(abs(ratio) - 1.0) > _LENTZ_TOL and it < _LENTZ_MAXITER:
        aj = zinv - aj
        num = 1.0 / num + aj
        den = 1.0 / den + aj
        ratio = num / den
        zinv = -zinv
        run = run * ratio
        it += 1
    return -n / z + run


@njit(cache=True)
def _mie_point(x, m, extra_terms):
    nstop = n_terms(x) + extra_terms
    mx = m * x
    nmx = max(nstop, int(math.ceil(abs(mx)))) + DN_PAD
    d = np.empty(nmx + 1, dtype=np.complex128)
    d[nmx] = _lentz_dn(mx, nmx)
    for n in range(nmx, 0, -1):
        d[n - 1] = n / mx - 1.0 / (d[n] + n / mx)

    psi0 = math.cos(x)
    psi1 = math.sin(x)
    chi0 = -math.sin(x)
    chi1 = math.cos(x)
    qext = 0.0
    qsca = 0.0
    back = 0.0 + 0.0j
    sign = -1.0
    for n in range(1, nstop + 1):
        fn = 2.0 * n + 1.0
        psi = (2.0 * n - 1.0) * psi1 / x - psi0
        chi = (2.0 * n - 1.0) * chi1 / x - chi0
        xi = complex(psi, -chi)
        xi1 = complex(psi1, -chi1)
        t = d[n] / m + n / x
        an = (t * psi - psi1) / (t * xi - xi1)
        t = d[n] * m + n / x
        bn = (t * psi - psi1) / (t * xi - xi1)
        qext += fn * (an.real + bn.real)
        qsca += fn * (an.real * an.real + an.imag * an.imag + bn.real * bn.real + bn.imag * bn.imag)
        back += fn * sign * (an - bn)
        sign = -sign
        psi0 = psi1
        psi1 = psi
        chi0 = chi1
        chi1 = chi
    x2 = x * x
    return 2.0 * qext / x2, 2.0 * qsca / x2, (back.real * back.real + back.imag * back.imag) / x2


@njit(cache=True, nogil=True)
def mie_sums_numba(x, m, extra_terms):
    out = np.empty((x.shape[0], 3))
    for i in range(x.shape[0]):
        qe, qs, qb = _mie_point(x[i], m, extra_terms)
        out[i, 0] = qe
        out[i, 1] = qs
        out[i, 2] = qb
    return out


def _lentz_dn_numpy(z, n):
    zinv = 2.0 / z
    alpha = (n + 0.5) * zinv
    aj = -(n + 1.5) * zinv
    num = aj + 1.0 / alpha
    den = aj
    ratio = num / den
    run = alpha * ratio
    done = np.abs(np.abs(ratio) - 1.0) <= _LENTZ_TOL
    it = 0
    with np.errstate(all="ignore"):
        while not done.all() and it < _LENTZ_MAXITER:
            aj = zinv - aj
            num = 1.0 / num + aj
            den = 1.0 / den + aj
            ratio = np.where(done, 1.0, num / den)
            zinv = -zinv
            run = run * ratio
            done |= np.abs(np.abs(ratio) - 1.0) <= _LENTZ_TOL
            it += 1
    return -n / z + run


def _mie_chunk_numpy(x, m, extra_terms):
    nstop = np.ceil(x + 4.0 * np.cbrt(x) + 2.0).astype(np.int64) + extra_terms
    mx = m * x
    top = int(nstop.max())
    # per-row start order, so a row's result does not depend on its chunk
    nmx = np.maximum(nstop, np.ceil(np.abs(mx)).astype(np.int64)) + DN_PAD
    start = _lentz_dn_numpy(mx, nmx)

    d = np.empty((top + 1, x.size), dtype=np.complex128)
    dn = start
    for n in range(int(nmx.max()), 0, -1):
        if n <= top:
            d[n] = dn
        dn = np.where(n <= nmx, n / mx - 1.0 / (dn + n / mx), start)
    d[0] = dn

    psi0 = np.cos(x)
    psi1 = np.sin(x)
    chi0 = -np.sin(x)
    chi1 = np.cos(x)
    qext = np.zeros(x.size)
    qsca = np.zeros(x.size)
    back = np.zeros(x.size, dtype=np.complex128)
    sign = -1.0
    # rows past their own n_stop may overflow in chi; they are masked out
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for n in range(1, top + 1):
            active = n <= nstop
            fn = 2.0 * n + 1.0
            psi = (2.0 * n - 1.0) * psi1 / x - psi0
            chi = (2.0 * n - 1.0) * chi1 / x - chi0
            xi = psi - 1j * chi
            xi1 = psi1 - 1j * chi1
            t = d[n] / m + n / x
            an = (t * psi - psi1) / (t * xi - xi1)
            t = d[n] * m + n / x
            bn = (t * psi - psi1) / (t * xi - xi1)
            qext += np.where(active, fn * (an.real + bn.real), 0.0)
            qsca += np.where(active, fn * (np.abs(an) ** 2 + np.abs(bn) ** 2), 0.0)
            back += np.where(active, fn * sign * (an - bn), 0.0)
            sign = -sign
            psi0, psi1 = psi1, psi
            chi0, chi1 = chi1, chi
    x2 = x * x
    return np.column_stack((2.0 * qext / x2, 2.0 * qsca / x2, np.abs(back) ** 2 / x2))


def mie_sums_numpy(x, m, extra_terms, chunk=256):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((x.size, 3))
    # sorting keeps n_stop nearly uniform inside a chunk
    order = np.argsort(x, kind="stable")
    for start in range(0, x.size, chunk):
        idx = order[start : start + chunk]
        out[idx] = _mie_chunk_numpy(x[idx], complex(m), extra_terms)
    return out


# --------------------------------------------------------------------------
# Soft-target (fog volume) received power
# --------------------------------------------------------------------------


@njit(cache=True)
def _crossover(r, r_zero, r_full):
    if r <= r_zero:
        return 0.0
    if r >= r_full:
        return 1.0
    return (r - r_zero) / (r_full - r_zero)


@njit(cache=True, nogil=True)
def soft_power_numba(ranges, r0, alpha, tau_h, c, r_zero, r_full, min_range, n):
    out = np.zeros(ranges.shape[0])
    t_end = 2.0 * tau_h
    for k in range(ranges.shape[0]):
        R = ranges[k]
        t_lo = max(0.0, 2.0 * (R - r0) / c)
        t_hi = min(t_end, 2.0 * (R - min_range) / c)
        if t_hi <= t_lo:
            continue
        h = (t_hi - t_lo) / n
        acc = 0.0
        for j in range(n + 1):
            t = t_lo + j * h
            r = R - 0.5 * c * t
            s = math.sin(math.pi * t / t_end)
            g = s * s * _crossover(r, r_zero, r_full) * math.exp(-2.0 * alpha * r) / (r * r)
            if j == 0 or j == n:
                acc += g
            elif j % 2 == 1:
                acc += 4.0 * g
            else:
                acc += 2.0 * g
        out[k] = acc * h / 3.0
    return out


def soft_power_numpy(ranges, r0, alpha, tau_h, c, r_zero, r_full, min_range, n):
    R = np.asarray(ranges, dtype=np.float64)
    t_end = 2.0 * tau_h
    t_lo = np.maximum(0.0, 2.0 * (R - r0) / c)
    t_hi = np.minimum(t_end, 2.0 * (R - min_range) / c)
    live = t_hi > t_lo
    h = np.where(live, (t_hi - t_lo) / n, 0.0)
    t = t_lo[:, None] + h[:, None] * np.arange(n + 1)[None, :]
    r = R[:, None] - 0.5 * c * t
    r = np.where(live[:, None], r, 1.0)
    xi = np.clip((r - r_zero) / (r_full - r_zero), 0.0, 1.0)
    g = np.sin(np.pi * t / t_end) ** 2 * xi * np.exp(-2.0 * alpha * r) / (r * r)
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return np.where(live, (g @ w) * h / 3.0, 0.0)


# --------------------------------------------------------------------------
# Point-cloud augmentation
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def augment_points_numba(
    pts, alpha, noise_floor, intensity_scale, min_range, grid_step, soft_max, argmax, u, jitter_half
):
    npts = pts.shape[0]
    out = np.empty((npts, 4))
    status = np.empty(npts, dtype=np.uint8)
    rng0 = np.empty(npts)
    last = soft_max.shape[0] - 1
    for i in range(npts):
        x = np.float64(pts[i, 0])
        y = np.float64(pts[i, 1])
        z = np.float64(pts[i, 2])
        inten = np.float64(pts[i, 3])
        R0 = math.sqrt(x * x + y * y + z * z)
        rng0[i] = R0
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
        if not (R0 > 0.0) or not math.isfinite(R0):
            out[i, 3] = 0.0
            status[i] = DROPPED
            continue
        att = math.exp(-2.0 * alpha * R0)
        hard = inten * att

        # number of scan ranges strictly below R0
        pos = (R0 - min_range) / grid_step
        if pos <= 0.0:
            c = 0
        elif pos >= last + 1.0:
            c = last
        else:
            c = int(math.ceil(pos))
            # settle rounding against the grid values themselves
            if c > 0 and min_range + grid_step * (c - 1) >= R0:
                c -= 1
            elif min_range + grid_step * c < R0:
                c += 1
            if c > last:
                c = last
        soft = soft_max[c]
        arg = argmax[c]

        if soft > hard:
            new_r = arg + jitter_half * (2.0 * u[i] - 1.0)
            if new_r <= 0.0 or new_r >= R0:
                new_r = arg
            k = new_r / R0
            out[i, 0] = x * k
            out[i, 1] = y * k
            out[i, 2] = z * k
            out[i, 3] = min(1.0, max(0.0, intensity_scale * soft))
            status[i] = SCATTERED
        elif hard >= noise_floor or inten < noise_floor:
            out[i, 3] = inten * att
            status[i] = RETAINED
        else:
            out[i, 3] = 0.0
            status[i] = DROPPED
    return out, status, rng0


def scan_count_numpy(r0, min_range, grid_step, last):
    """Number of grid ranges ``min_range + k * grid_step`` strictly below ``r0``, capped at ``last``."""
    pos = np.clip((r0 - min_range) / grid_step, 0.0, last + 1.0)
    c = np.ceil(pos).astype(np.int64)
    c = np.where((c > 0) & (min_range + grid_step * (c - 1) >= r0), c - 1, c)
    c = np.where(min_range + grid_step * c < r0, c + 1, c)
    return np.minimum(c, last)


def augment_points_numpy(
    pts, alpha, noise_floor, intensity_scale, min_range, grid_step, soft_max, argmax, u, jitter_half
):
    p = np.asarray(pts, dtype=np.float64)
    xyz = p[:, :3]
    inten = p[:, 3]
    with np.errstate(invalid="ignore", over="ignore"):
        R0 = np.sqrt(np.einsum("ij,ij->i", xyz, xyz))
    valid = np.isfinite(R0) & (R0 > 0.0)
    R0_safe = np.where(valid, R0, 1.0)
    att = np.exp(-2.0 * alpha * R0_safe)
    hard = inten * att

    last = soft_max.shape[0] - 1
    c = scan_count_numpy(R0_safe, min_range, grid_step, last)
    soft = soft_max[c]
    arg = argmax[c]

    scattered = valid & (soft > hard)
    retained = valid & ~scattered & ((hard >= noise_floor) | (inten < noise_floor))

    new_r = arg + jitter_half * (2.0 * u - 1.0)
    new_r = np.where((new_r > 0.0) & (new_r < R0_safe), new_r, arg)
    k = np.where(scattered, new_r / R0_safe, 1.0)

    out = p.copy()
    out[:, :3] = np.where(scattered[:, None], xyz * k[:, None], xyz)
    out[:, 3] = np.where(
        scattered,
        np.clip(intensity_scale * soft, 0.0, 1.0),
        np.where(retained, inten * att, 0.0),
    )
    status = np.full(p.shape[0], DROPPED, dtype=np.uint8)
    status[retained] = RETAINED
    status[scattered] = SCATTERED
    return out, status, R0


def _mie_sums_dispatch_numba(x, m, extra_terms):
    return mie_sums_numba(np.ascontiguousarray(x, dtype=np.float64), complex(m), int(extra_terms))


if USE_NUMBA:
    mie_sums = _mie_sums_dispatch_numba
    soft_power = soft_power_numba
    augment_points = augment_points_numba
else:
    mie_sums = mie_sums_numpy
    soft_power = soft_power_numpy
    augment_points = augment_points_numpy
