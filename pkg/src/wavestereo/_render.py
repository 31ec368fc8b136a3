"""Jitted per-pixel kernels for the synthetic wave-scene renderer.

All stochastic values (texture lattice, sensor noise) come from counter-based
hashing of pixel index / lattice coordinates / seed, never from a sequential
RNG, so rendering is bit-reproducible regardless of pixel order or thread
count.
"""

import math

import numpy as np
from numba import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_OCT = U64(0xA0761D6478BD642F)
_NSE = U64(0xE7037ED1A0B428DB)
_INV53 = 1.0 / 9007199254740992.0   # 2**-53

# hit kinds written by the render kernel
KIND_WATER = 0
KIND_CYLINDER = 1
KIND_MISS = 2

BISECT_ITERS = 34
BLOCK_SAMPLES = 16


@njit(cache=True, inline="always")
def _mix64(z):
    z = z + _GAMMA
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _hash3(a, b, c):
    h = _mix64(a)
    h = _mix64(h ^ b)
    return _mix64(h ^ c)


@njit(cache=True, inline="always")
def _fade(t):
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


@njit(cache=True, inline="always")
def _vnoise(x, y, seed):
    """Value noise on the unit lattice, quintic-smoothed, range [0, 1)."""
    ix = math.floor(x)
    iy = math.floor(y)
    fx = x - ix
    fy = y - iy
    i = U64(np.int64(ix))
    j = U64(np.int64(iy))
    one = U64(1)
    v00 = float(_hash3(i, j, seed) >> U64(11)) * _INV53
    v10 = float(_hash3(i + one, j, seed) >> U64(11)) * _INV53
    v01 = float(_hash3(i, j + one, seed) >> U64(11)) * _INV53
    v11 = float(_hash3(i + one, j + one, seed) >> U64(11)) * _INV53
    wx = _fade(fx)
    wy = _fade(fy)
    top = v00 + (v10 - v00) * wx
    bot = v01 + (v11 - v01) * wx
    return top + (bot - top) * wy


@njit(cache=True, inline="always")
def _fractal(x, y, seed):
    """Two-octave value noise, range [0, 1)."""
    n0 = _vnoise(x, y, seed)
    n1 = _vnoise(x * 2.0 + 17.31, y * 2.0 + 9.77, seed ^ _OCT)
    return (n0 + 0.5 * n1) / 1.5


@njit(cache=True, inline="always")
def _eta(x, t, amp, k, om, ph):
    # long-crested wave traveling along +x
    return amp * math.cos(k * x - om * t + ph)


@njit(cache=True, inline="always")
def _water_tex(x, y, t, cphase, cell, contrast, seed):
    n = _fractal((x - cphase * t) / cell, y / cell, seed)
    return 128.0 + contrast * (2.0 * n - 1.0)


@njit(cache=True, inline="always")
def _cyl_tex(px, py, pz, ccx, ccy, rad, cell, contrast, seed):
    # static two-level patches over (arc length, height) coordinates
    th = math.atan2(py - ccy, px - ccx)
    n = _fractal(th * rad / cell, pz / cell, seed ^ _M2)
    if n < 0.5:
        return 128.0 - 1.1 * contrast
    return 128.0 + 1.3 * contrast


@njit(cache=True, inline="always")
def _gauss(u, v, cam, tbits, seed):
    h1 = _hash3(_hash3(U64(u), U64(v), U64(cam)), tbits, seed ^ _NSE)
    h2 = _mix64(h1 ^ _M1)
    u1 = _u01_bits(h1)
    u2 = _u01_bits(h2)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True, inline="always")
def _u01_bits(h):
    # (0, 1]: never 0 so log() is safe
    return (float(h >> U64(11)) + 1.0) * _INV53


@njit(cache=True, inline="always")
def _first_circle_hit(ox, oy, dx, dy, ccx, ccy, rad):
    """Smallest positive ray parameter hitting the circle, or inf."""
    bx = ox - ccx
    by = oy - ccy
    a = dx * dx + dy * dy
    if a <= 0.0:
        return math.inf
    b = 2.0 * (dx * bx + dy * by)
    cq = bx * bx + by * by - rad * rad
    disc = b * b - 4.0 * a * cq
    if disc < 0.0:
        return math.inf
    rt = math.sqrt(disc)
    s1 = (-b - rt) / (2.0 * a)
    if s1 > 1e-9:
        return s1
    s2 = (-b + rt) / (2.0 * a)
    if s2 > 1e-9:
        return s2
    return math.inf


@njit(cache=True, nogil=True)
def render_view(ox, oy, oz, r00, r01, r02, r10, r11, r12, r20, r21, r22,
                f_px, u0, v0, height, width,
                amp, k, om, ph, t, cphase,
                cell, contrast, tex_seed, noise_sigma, cam_id, tbits,
                has_cyl, ccx, ccy, crad,
                x_lo, x_hi, y_lo, y_hi,
                img, s_hit, kind):
    """Render one camera view; records hit depth and kind per pixel.

    The ray is parametrized so the parameter equals depth along the optical
    axis (camera-frame direction has z = 1). Returns the count of rays that
    left the extent without striking anything.
    """
    margin = 0.002 + 0.05 * amp
    seed = U64(tex_seed)
    misses = 0
    for v in range(height):
        dcy = (v - v0) / f_px
        for u in range(width):
            dcx = (u - u0) / f_px
            dwx = r00 * dcx + r01 * dcy + r02
            dwy = r10 * dcx + r11 * dcy + r12
            dwz = r20 * dcx + r21 * dcy + r22
            if dwz >= -1e-12:
                kind[v, u] = KIND_MISS
                s_hit[v, u] = np.nan
                img[v, u] = 0.0
                misses += 1
                continue
            lo = (oz - (amp + margin)) / (-dwz)
            hi = (oz + (amp + margin)) / (-dwz)
            # cylinder hit, if its column rises above the local water here
            s_cyl = math.inf
            if has_cyl:
                sc = _first_circle_hit(ox, oy, dwx, dwy, ccx, ccy, crad)
                if sc < math.inf:
                    zc = oz + sc * dwz
                    ec = _eta(ox + sc * dwx, t, amp, k, om, ph)
                    if zc > ec:
                        s_cyl = sc
            # bisect g(s) = z(s) - eta(x(s)) on the guaranteed bracket
            for _ in range(BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                g = (oz + mid * dwz) - _eta(ox + mid * dwx, t, amp, k, om, ph)
                if g > 0.0:
                    lo = mid
                else:
                    hi = mid
            s_surf = 0.5 * (lo + hi)
            if s_cyl < s_surf:
                px = ox + s_cyl * dwx
                py = oy + s_cyl * dwy
                pz = oz + s_cyl * dwz
                tex = _cyl_tex(px, py, pz, ccx, ccy, crad, cell, contrast, seed)
                s_hit[v, u] = s_cyl
                kind[v, u] = KIND_CYLINDER
            else:
                px = ox + s_surf * dwx
                py = oy + s_surf * dwy
                if px < x_lo or px > x_hi or py < y_lo or py > y_hi:
                    kind[v, u] = KIND_MISS
                    s_hit[v, u] = np.nan
                    img[v, u] = 0.0
                    misses += 1
                    continue
                tex = _water_tex(px, py, t, cphase, cell, contrast, seed)
                s_hit[v, u] = s_surf
                kind[v, u] = KIND_WATER
            if noise_sigma > 0.0:
                tex += noise_sigma * _gauss(u, v, cam_id, tbits, seed)
            img[v, u] = tex
    return misses


@njit(cache=True, nogil=True)
def ground_truth(ox, oy, oz, r00, r01, r02, r10, r11, r12, r20, r21, r22,
                 f_px, u0, v0, height, width, baseline,
                 amp, k, om, ph, t,
                 has_cyl, ccx, ccy, crad,
                 s_hit, kind, disp, visible):
    """Left-referenced ground-truth disparity and right-view visibility.

    Visibility = the right projection lands inside the right image and the
    segment from the right camera to the surface point is not blocked by
    either the water surface (sampled test) or the cylinder.
    """
    # right camera center: baseline along the camera x axis
    rx = ox + r00 * baseline
    ry = oy + r10 * baseline
    rz = oz + r20 * baseline
    for v in range(height):
        dcy = (v - v0) / f_px
        for u in range(width):
            if kind[v, u] == KIND_MISS:
                disp[v, u] = np.nan
                visible[v, u] = 0
                continue
            s = s_hit[v, u]
            dcx = (u - u0) / f_px
            pxw = ox + s * (r00 * dcx + r01 * dcy + r02)
            pyw = oy + s * (r10 * dcx + r11 * dcy + r12)
            pzw = oz + s * (r20 * dcx + r21 * dcy + r22)
            d = f_px * baseline / s
            disp[v, u] = d
            u_r = u - d
            ok = (u_r >= 0.0) and (u_r <= width - 1.0)
            if ok:
                # segment right camera -> hit point
                gx = pxw - rx
                gy = pyw - ry
                gz = pzw - rz
                if has_cyl:
                    sc = _first_circle_hit(rx, ry, gx, gy, ccx, ccy, crad)
                    if sc < 1.0 - 1e-9:
                        zc = rz + sc * gz
                        ec = _eta(rx + sc * gx, t, amp, k, om, ph)
                        if zc > ec:
                            ok = False
                if ok:
                    for i in range(1, BLOCK_SAMPLES + 1):
                        tau = 0.98 * i / BLOCK_SAMPLES
                        zz = rz + tau * gz
                        ee = _eta(rx + tau * gx, t, amp, k, om, ph)
                        if zz - ee < -1e-9:
                            ok = False
                            break
            visible[v, u] = 1 if ok else 0
