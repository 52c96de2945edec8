# src/fractalmeter/engine/kernels.py

"""
Compiled numerical kernels.

This module holds the loops that are too slow in numpy form:
- the O(n^2) Riesz pair sum over weighted atoms,
- grid raycasting (line integral of a piecewise-constant density),
- the per-angle L2 norm of binned projections.

Kernels take and return plain float64 arrays; they know nothing about
trees, modes or levels beyond what is passed in.
"""

import numpy as np
from numba import njit


# Ties between cell-boundary crossings closer than this are one crossing.
_SNAP = 2.0**-40


# ---------------------------------------------------------------------
# Riesz energy
# ---------------------------------------------------------------------

@njit(cache=True, nogil=True)
def riesz_pair_sum(points: np.ndarray, masses: np.ndarray, s: float) -> float:
    """
    Sum over ordered pairs a != b of m_a m_b |x_a - x_b|**-s.

    Fixed summation order (row by row) so results are reproducible.
    """
    n = points.shape[0]
    d = points.shape[1]
    total = 0.0
    for a in range(n):
        row = 0.0
        for b in range(a + 1, n):
            r2 = 0.0
            for k in range(d):
                diff = points[a, k] - points[b, k]
                r2 += diff * diff
            row += masses[b] * r2 ** (-0.5 * s)
        total += masses[a] * row
    return 2.0 * total


# ---------------------------------------------------------------------
# Raycasting
# ---------------------------------------------------------------------

@njit(cache=True, nogil=True)
def line_integral(density: np.ndarray, px: float, py: float, dx: float, dy: float) -> float:
    """
    Integral of a cellwise-constant density on [0,1)^2 along the line
    {p + t*d}; (dx, dy) must be a unit vector. density is indexed [x, y].

    The line is clipped to the unit square (slab test) and the visited
    cells are walked in order of crossing (DDA traversal).
    """
    n = density.shape[0]
    h = 1.0 / n

    t0 = -np.inf
    t1 = np.inf
    if dx == 0.0:
        if px < 0.0 or px >= 1.0:
            return 0.0
    else:
        ta = -px / dx
        tb = (1.0 - px) / dx
        t0 = max(t0, min(ta, tb))
        t1 = min(t1, max(ta, tb))
    if dy == 0.0:
        if py < 0.0 or py >= 1.0:
            return 0.0
    else:
        ta = -py / dy
        tb = (1.0 - py) / dy
        t0 = max(t0, min(ta, tb))
        t1 = min(t1, max(ta, tb))
    if not t1 > t0:
        return 0.0

    ix = min(max(int(np.floor((px + t0 * dx) * n)), 0), n - 1)
    iy = min(max(int(np.floor((py + t0 * dy) * n)), 0), n - 1)
    if dx < 0.0 and ix > 0 and (px + t0 * dx) * n - ix < _SNAP:
        ix -= 1
    if dy < 0.0 and iy > 0 and (py + t0 * dy) * n - iy < _SNAP:
        iy -= 1

    sx = 1 if dx > 0.0 else -1
    sy = 1 if dy > 0.0 else -1
    if dx != 0.0:
        bx = (ix + 1) * h if dx > 0.0 else ix * h
        tmx = (bx - px) / dx
        tdx = h / abs(dx)
    else:
        tmx = np.inf
        tdx = np.inf
    if dy != 0.0:
        by = (iy + 1) * h if dy > 0.0 else iy * h
        tmy = (by - py) / dy
        tdy = h / abs(dy)
    else:
        tmy = np.inf
        tdy = np.inf

    acc = 0.0
    t = t0
    while t < t1 and 0 <= ix < n and 0 <= iy < n:
        t_next = min(tmx, tmy, t1)
        acc += density[ix, iy] * (t_next - t)
        t = t_next
        if abs(tmx - tmy) < _SNAP:
            ix += sx
            iy += sy
            tmx += tdx
            tmy += tdy
        elif tmx < tmy:
            ix += sx
            tmx += tdx
        else:
            iy += sy
            tmy += tdy
    return acc


@njit(cache=True, nogil=True)
def line_integrals(density: np.ndarray, points: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """line_integral for many (point, angle) pairs."""
    out = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        out[i] = line_integral(density, points[i, 0], points[i, 1], np.cos(angles[i]), np.sin(angles[i]))
    return out


# ---------------------------------------------------------------------
# Projection sweeps
# ---------------------------------------------------------------------

@njit(cache=True, nogil=True)
def projection_l2_sweep(
    points: np.ndarray,
    masses: np.ndarray,
    cosines: np.ndarray,
    sines: np.ndarray,
    level: int,
) -> np.ndarray:
    """
    For each angle, project weighted atoms in the plane onto theta,
    bin at dyadic `level` over [-2, 2), and return 2**level * sum(bin**2).
    """
    scale = 2.0**level
    half = 2 * (1 << level)
    buf = np.zeros(2 * half)
    out = np.empty(cosines.shape[0])
    for a in range(cosines.shape[0]):
        buf[:] = 0.0
        c = cosines[a]
        s = sines[a]
        for i in range(points.shape[0]):
            b = int(np.floor((points[i, 0] * c + points[i, 1] * s) * scale)) + half
            buf[b] += masses[i]
        acc = 0.0
        for b in range(buf.shape[0]):
            acc += buf[b] * buf[b]
        out[a] = acc * scale
    return out
