# src/fractalmeter/engine/projection.py

"""
Orthogonal projections of planar measures and their norms.

This module contains:
- projection of a grid measure onto a direction, binned dyadically,
- the comparison of centre-atom and sub-atom projections in L2,
- Sobolev norms of binned line measures (FFT + trapezoid quadrature),
- the angle-averaged Sobolev integral against the dyadic energy,
- sliced masses along lines (grid raycasting).

Projection is Pi_theta(x) = theta . x with theta = (cos a, sin a).
"""

import heapq
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, cos, pi, sin
from typing import Callable, Final

import numpy as np
from scipy import integrate

from . import sparse
from .energy import dyadic_energy, l2_norm_sq
from .kernels import line_integral, line_integrals, projection_l2_sweep
from .measure import discretize
from .model import (
    Direction,
    ExponentError,
    Grid1D,
    GridMeasure,
    MeasureError,
    MeasureTree,
    Mode,
    ShapeMismatchError,
    ZeroMassError,
    angle_grid,
    dense_line,
)


DEFAULT_SUBDIV = 3

# Cutoff 2**(level + CUTOFF_BITS) and default step cutoff / 2**STEP_BITS.
CUTOFF_BITS = 5
STEP_BITS = 12

# Oversampling of the trigonometric sum relative to the support length.
_OVERSAMPLE = 16


# ---------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------

def grid_atoms(grid: GridMeasure, subdiv: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Atoms of a planar grid: cell centres (subdiv 0) or 4**subdiv equal
    sub-atoms per cell. Masses keep the grid's numeric mode.
    """
    if grid.dim != 2:
        raise ShapeMismatchError("projections need a planar grid")
    if subdiv < 0:
        raise ValueError("subdiv must be >= 0")

    k = 1 << subdiv
    coords = grid.coords()
    offsets = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), axis=-1).reshape(-1, 2)
    sub = (coords[:, None, :] * k + offsets[None, :, :]).reshape(-1, 2)
    points = (sub + 0.5) * 2.0 ** -(grid.level + subdiv)

    share = Fraction(1, k * k) if sparse.is_exact(grid.masses) else 1.0 / (k * k)
    masses = np.repeat(grid.masses * share, k * k)
    return points, masses


def bin_on_line(values: np.ndarray, masses: np.ndarray, level: int) -> Grid1D:
    """Bin weighted points of the line into dyadic intervals of `level`."""
    idx = np.floor(values * 2.0**level).astype(np.int64)
    keys, sums = sparse.group_sum(idx, masses)
    return dense_line(level, keys, sums)


# ---------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------

def project_grid(
    grid: GridMeasure,
    theta: Direction,
    subdiv: int = 0,
    out_level: int | None = None,
) -> Grid1D:
    """
    Push a planar grid measure forward under Pi_theta.

    Notes:
    - subdiv 0 projects one atom per cell centre; subdiv r >= 1 projects
      4**r sub-atoms per cell, approaching the projection of the density.
    - The result is binned at the grid's own level unless `out_level`
      is given. Total mass is preserved exactly in rational mode.
    """
    points, masses = grid_atoms(grid, subdiv)
    c, s = theta.vector
    level = grid.level if out_level is None else out_level
    return bin_on_line(points[:, 0] * c + points[:, 1] * s, masses, level)


def project_tree(tree: MeasureTree, theta: Direction, out_level: int, subdiv: int = 0) -> Grid1D:
    """Projection of the tree's leaf atoms, binned at `out_level`."""
    return project_grid(discretize(tree, tree.depth), theta, subdiv=subdiv, out_level=out_level)


@dataclass(frozen=True, slots=True)
class L2Comparison:
    centres: float
    density: float
    ratio: float


def l2_comparison(grid: GridMeasure, theta: Direction, subdiv: int = DEFAULT_SUBDIV) -> L2Comparison:
    """
    Squared L2 norms of the centre-atom projection and of the sub-atom
    (density) projection, both binned at the grid level, and their ratio.
    """
    if grid.total == 0:
        raise ZeroMassError("cannot compare projections of a zero measure")
    a = float(l2_norm_sq(project_grid(grid, theta, 0)))
    b = float(l2_norm_sq(project_grid(grid, theta, subdiv)))
    return L2Comparison(centres=a, density=b, ratio=a / b)


def projection_norms(
    grid: GridMeasure,
    angles: np.ndarray,
    subdiv: int = 0,
    out_level: int | None = None,
) -> np.ndarray:
    """Squared L2 norms of the binned projections for every angle (float)."""
    points, masses = grid_atoms(grid, subdiv)
    level = grid.level if out_level is None else out_level
    return projection_l2_sweep(
        np.ascontiguousarray(points, dtype=np.float64),
        np.asarray(masses, dtype=np.float64),
        np.cos(angles),
        np.sin(angles),
        level,
    )


# ---------------------------------------------------------------------
# Sobolev norms
# ---------------------------------------------------------------------

def _check_gamma(gamma: float) -> None:
    if not -0.5 < gamma < 0.5:
        raise ExponentError(f"Sobolev index gamma={gamma} must lie in (-1/2, 1/2)")


def sobolev_norm_sq(
    line: Grid1D,
    gamma: float,
    cutoff: float | None = None,
    quad_step: float | None = None,
) -> float:
    """
    Integral of |xi|**(2 gamma) |nu_hat(xi)|**2 over |xi| <= cutoff, nu the
    step density of the binned measure.

    Notes:
    - nu_hat(xi) = sinc(xi h) * sum_i m_i exp(-2 pi i xi c_i); the sum is
      periodic in xi with period 1/h, so it is evaluated once by FFT on a
      grid of step 1/(P h) and tiled up to the cutoff.
    - The grid step is the smaller of quad_step (default cutoff / 2**12)
      and the step resolving the support length.
    - The first panel [0, step] is integrated in closed form so that
      negative gamma is handled; the rest uses the trapezoid rule.
    """
    _check_gamma(gamma)
    h = line.width
    cutoff = 2.0 ** (line.level + CUTOFF_BITS) if cutoff is None else float(cutoff)
    if cutoff < 2.0 ** (line.level + 3):
        raise MeasureError(f"cutoff {cutoff} is below 2**(level + 3)")
    quad_step = cutoff / 2**STEP_BITS if quad_step is None else float(quad_step)

    masses = line.float_masses()
    n = max(len(masses), 1)
    p = 1 << int(ceil(np.log2(max(_OVERSAMPLE * n, ceil(1.0 / (quad_step * h)), 2))))
    step = 1.0 / (p * h)

    power = np.abs(np.fft.fft(masses, n=p)) ** 2
    n_points = int(ceil(cutoff / step)) + 1
    tiled = np.resize(power, n_points)
    xi = step * np.arange(n_points)
    weight = np.sinc(xi * h) ** 2 * tiled

    first = step ** (2 * gamma + 1) / (2 * gamma + 1) * weight[0]
    rest = integrate.trapezoid(xi[1:] ** (2 * gamma) * weight[1:], xi[1:])
    return float(2.0 * (first + rest))


# ---------------------------------------------------------------------
# Marstrand integral
# ---------------------------------------------------------------------

MARSTRAND_RTOL: Final[float] = 1e-2
# Refinement budget per base angle.
MARSTRAND_EVALS_PER_ANGLE: Final[int] = 8


@dataclass(frozen=True, slots=True)
class MarstrandIntegral:
    lhs: float
    rhs: float
    ratio: float
    gamma: float
    n_angles: int
    evaluations: int


def adaptive_angle_mean(
    f: Callable[[float], float],
    n_angles: int,
    min_width: float,
    rtol: float = MARSTRAND_RTOL,
    max_evals: int | None = None,
) -> tuple[float, int]:
    """
    Mean of f over the circle by adaptive trapezoid quadrature.

    Starts from the equispaced grid of n_angles and bisects the panel with
    the largest width * |f(hi) - f(lo)| until every panel is below
    rtol * integral, panels reach min_width, or max_evals is spent.
    Returns (mean, number of evaluations).
    """
    budget = MARSTRAND_EVALS_PER_ANGLE * n_angles if max_evals is None else max_evals
    nodes = [float(a) for a in angle_grid(n_angles)]
    values = [f(a) for a in nodes]
    nodes.append(2.0 * pi)
    values.append(values[0])
    evals = n_angles

    def panel(lo: float, hi: float, f_lo: float, f_hi: float) -> tuple[float, float, float, float, float]:
        return (-(hi - lo) * abs(f_hi - f_lo), lo, hi, f_lo, f_hi)

    heap = [panel(nodes[i], nodes[i + 1], values[i], values[i + 1]) for i in range(n_angles)]
    heapq.heapify(heap)
    integral = sum((hi - lo) * (f_lo + f_hi) / 2 for _, lo, hi, f_lo, f_hi in heap)

    while heap and evals < budget:
        neg_err, lo, hi, f_lo, f_hi = heapq.heappop(heap)
        if -neg_err <= rtol * integral:
            break
        if hi - lo < 2 * min_width:
            continue
        mid = (lo + hi) / 2
        f_mid = f(mid)
        evals += 1
        integral += (hi - lo) * (2 * f_mid - f_lo - f_hi) / 4
        heapq.heappush(heap, panel(lo, mid, f_lo, f_mid))
        heapq.heappush(heap, panel(mid, hi, f_mid, f_hi))
    return integral / (2.0 * pi), evals


def marstrand_integral(
    tree: MeasureTree,
    gamma: float,
    n_angles: int = 32,
    subdiv: int = DEFAULT_SUBDIV,
    rtol: float = MARSTRAND_RTOL,
) -> MarstrandIntegral:
    """
    Angle average of the Sobolev norms of the projections against the
    dyadic energy with exponent 1 + 2 gamma.

    Directions in which the projection collapses (a segment seen end-on)
    give spikes of angular width about 2**-depth; the angle average is
    refined adaptively down to 2**-(depth + 2) so those spikes get their
    true weight at every depth.
    """
    _check_gamma(gamma)
    if tree.dim != 2:
        raise ShapeMismatchError("the Sobolev integral needs a planar measure")
    if n_angles < 16:
        raise MeasureError("n_angles must be >= 16")

    grid = discretize(tree, tree.depth)
    points, masses = grid_atoms(grid, subdiv)
    masses = np.asarray(masses, dtype=np.float64)

    def norm(a: float) -> float:
        proj = bin_on_line(points[:, 0] * cos(a) + points[:, 1] * sin(a), masses, tree.depth)
        return sobolev_norm_sq(proj, gamma)

    lhs, evals = adaptive_angle_mean(norm, n_angles, 2.0 ** -(tree.depth + 2), rtol)
    rhs = float(dyadic_energy(tree, 1.0 + 2.0 * gamma))
    return MarstrandIntegral(lhs=lhs, rhs=rhs, ratio=lhs / rhs, gamma=gamma, n_angles=n_angles, evaluations=evals)


@dataclass(frozen=True, slots=True)
class SweepRow:
    angle: float
    sobolev: float
    l2: float


def angle_sweep(grid: GridMeasure, gamma: float, n_angles: int, subdiv: int = DEFAULT_SUBDIV) -> list[SweepRow]:
    """Per-angle (sobolev, l2) of the density projection, for plotting."""
    rows = []
    for a in angle_grid(n_angles):
        proj = project_grid(grid, Direction.of(float(a)), subdiv)
        rows.append(SweepRow(angle=float(a), sobolev=sobolev_norm_sq(proj, gamma), l2=float(l2_norm_sq(proj))))
    return rows


# ---------------------------------------------------------------------
# Slices
# ---------------------------------------------------------------------

def slice_measure(grid: GridMeasure, theta: Direction, x: tuple[float, float]):
    """
    Line integral of the grid density along the line through x with
    direction theta.

    Axis-parallel lines in rational mode are summed exactly (each crossed
    cell contributes density * 2**-m). Other lines are raycast in float;
    their cell lengths carry irrational factors, so rational grids only
    accept axis directions.
    """
    if grid.dim != 2:
        raise ShapeMismatchError("slices need a planar grid")
    if grid.mode is Mode.RATIONAL:
        if theta.angle not in (0.0, pi / 2, pi, 3 * pi / 2):
            raise MeasureError(f"exact slices run along the axes only, not at angle {theta.angle}; use float mode")
        return _axis_slice(grid, theta, x)
    c, s = theta.vector
    return float(line_integral(grid.density(), float(x[0]), float(x[1]), c, s))


def _axis_slice(grid: GridMeasure, theta: Direction, x: tuple[float, float]) -> Fraction:
    horizontal = theta.angle in (0.0, pi)
    fixed = x[1] if horizontal else x[0]
    if not 0.0 <= fixed < 1.0:
        return Fraction(0)
    row = int(Fraction(fixed) * (1 << grid.level))
    coords = grid.coords()
    hit = coords[:, 1 if horizontal else 0] == row
    return sparse.exact_sum(grid.masses[hit]) * (1 << grid.level)


def slice_profile(grid: GridMeasure, theta: Direction, offsets: np.ndarray) -> np.ndarray:
    """
    Sliced masses of the lines {t * theta_perp + u * theta}, one per offset t.
    """
    c, s = theta.vector
    points = np.stack([-s * offsets, c * offsets], axis=1)
    angles = np.full(len(offsets), theta.angle)
    return line_integrals(grid.density(), points, angles)


def disintegrated_total(grid: GridMeasure, theta: Direction, n_offsets: int = 4096) -> float:
    """Integral of the sliced masses over all offsets: recovers the total mass."""
    offsets = np.linspace(-1.5, 1.5, n_offsets)
    return float(integrate.trapezoid(slice_profile(grid, theta, offsets), offsets))


def line_support_length(line: Grid1D) -> float:
    masses = line.float_masses()
    nz = np.flatnonzero(masses > 0)
    return 0.0 if len(nz) == 0 else (nz[-1] - nz[0] + 1) * line.width
