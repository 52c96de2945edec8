# src/fractalmeter/engine/pinned.py

"""
Pinned distance measures and the multiscale entropy bound.

This module contains:
- the direction map and the pinned distance pushforward,
- the linearization gap between distance and projection entropies,
- the multiscale lower bound for the entropy of a pinned distance
  measure in terms of local projection entropies,
- Frostman and covering-number diagnostics of a tree.

A pin y must keep a distance of at least one output bin from every
positive-mass cell.
"""

from dataclasses import dataclass
from math import log2
from typing import Final, Sequence

import numpy as np

from . import sparse
from .entropy import interval_conditional_entropy, partition_entropy
from .measure import discretize, normalize, renormalize_to_unit, restrict
from .model import (
    CubeIndex,
    Direction,
    Grid1D,
    GridMeasure,
    MeasureTree,
    ScheduleError,
    SeparationError,
    ShapeMismatchError,
)
from .projection import bin_on_line, grid_atoms, project_tree
from .schedule import ScaleSchedule


# Per-scale loss (bits) allowed in the multiscale bound, recorded for pins
# at distance >= DEFAULT_SEPARATION and T = 1.
LINEARIZATION_CONSTANT_BITS: Final[float] = 8.0
DEFAULT_SEPARATION: Final[float] = 0.25


# ---------------------------------------------------------------------
# Directions and separation
# ---------------------------------------------------------------------

def direction(x: Sequence[float], y: Sequence[float]) -> Direction:
    """Unit vector from y toward x."""
    vx, vy = x[0] - y[0], x[1] - y[1]
    if vx == 0.0 and vy == 0.0:
        raise SeparationError(f"points coincide: {tuple(x)}")
    return Direction.from_vector(vx, vy)


def cell_distances(grid: GridMeasure, y: Sequence[float]) -> np.ndarray:
    """Euclidean distance from y to each positive-mass cell (closed square)."""
    h = 2.0**-grid.level
    lo = grid.coords() * h
    gap = np.maximum(np.maximum(lo - np.asarray(y[:2]), 0.0), np.asarray(y[:2]) - (lo + h))
    return np.hypot(gap[:, 0], gap[:, 1])


def support_distance(grid: GridMeasure, y: Sequence[float]) -> float:
    return float(cell_distances(grid, y).min())


def require_separated(grid: GridMeasure, y: Sequence[float], min_distance: float) -> None:
    dist = support_distance(grid, y)
    if dist < min_distance:
        raise SeparationError(f"pin {tuple(y)} is {dist:.3g} from the support, need >= {min_distance:.3g}")


# ---------------------------------------------------------------------
# Pushforward
# ---------------------------------------------------------------------

def pinned_pushforward(
    grid: GridMeasure,
    y: Sequence[float],
    out_level: int,
    subdiv: int = 0,
) -> Grid1D:
    """
    Pushforward of the (sub-)atomized grid under z -> |z - y|, binned at
    out_level. Mass is preserved exactly in rational mode.
    """
    if grid.dim != 2:
        raise ShapeMismatchError("pinned distances need a planar grid")
    require_separated(grid, y, 2.0**-out_level)
    points, masses = grid_atoms(grid, subdiv)
    dist = np.hypot(points[:, 0] - y[0], points[:, 1] - y[1])
    return bin_on_line(dist, masses, out_level)


def pinned_tree(tree: MeasureTree, y: Sequence[float], out_level: int, subdiv: int = 0) -> Grid1D:
    return pinned_pushforward(discretize(tree, tree.depth), y, out_level, subdiv)


# ---------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------

def linearization_gap(
    tree: MeasureTree,
    q: CubeIndex,
    y: Sequence[float],
    fine: int,
    T: int = 1,
) -> float:
    """
    |H(Delta_y mu_Q, D_fine | D_m) - H(Pi_theta mu_Q, D_fine | D_m)| in bits,
    m = level of Q and theta = theta(x_Q, y), x_Q the centre of Q.
    """
    gap = fine - q.level
    if gap < 0 or gap > q.level + T:
        raise ScheduleError(f"fine level {fine} is not within [{q.level}, {2 * q.level + T}]")
    mu_q = normalize(restrict(tree, [q]))
    grid = discretize(mu_q, mu_q.depth)
    theta = direction(q.center, y)

    dist = pinned_pushforward(grid, y, fine)
    proj = project_tree(mu_q, theta, out_level=fine)
    h_dist = interval_conditional_entropy(dist, fine, q.level).bits
    h_proj = interval_conditional_entropy(proj, fine, q.level).bits
    return abs(h_dist - h_proj)


# ---------------------------------------------------------------------
# Multiscale bound
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class MultiscaleBound:
    """
    lhs = H(Delta_y mu, D_{m_k}); rhs_sum = sum over blocks of the local
    projection entropies; per_scale[j] is block j's contribution.
    """

    lhs: float
    rhs_sum: float
    per_scale: tuple[float, ...]
    k: int
    constant: float

    @property
    def margin(self) -> float:
        return self.lhs - (self.rhs_sum - self.constant * self.k)

    @property
    def holds(self) -> bool:
        return self.margin >= 0.0


def local_projection_entropies(tree: MeasureTree, y: Sequence[float], level: int, span: int) -> float:
    """
    sum_{Q in D_level} mu(Q) * H(mu^Q_theta(x_Q, y), D_span), computed for
    all cubes of the level at once from the leaf atoms.
    """
    if span == 0:
        return 0.0
    shift = tree.depth - level
    lv = tree.leaves
    coords = sparse.decode(lv.keys, tree.dim, tree.depth)
    owner_coords = coords >> shift
    owner_keys = sparse.ancestor_keys(lv.keys, tree.dim, shift)
    uniq, owner_mass = sparse.group_sum(owner_keys, np.asarray(lv.masses, dtype=np.float64))
    owner = np.searchsorted(uniq, owner_keys)

    # unit-frame coordinates of each leaf centre inside its cube
    local = (coords - (owner_coords << shift) + 0.5) * 2.0**-shift

    cube_coords = sparse.decode(uniq, tree.dim, level)
    centres = (cube_coords + 0.5) * 2.0**-level
    theta = np.array([direction(c, y).vector for c in centres])

    th = theta[owner]
    values = local[:, 0] * th[:, 0] + local[:, 1] * th[:, 1]
    bins = np.floor(values * 2.0**span).astype(np.int64)
    width = 4 * (1 << span) + 1
    keys = owner * width + (bins + 2 * (1 << span))
    cell_keys, cell_mass = sparse.group_sum(keys, np.asarray(lv.masses, dtype=np.float64))
    g = owner_mass[cell_keys // width]
    keep = cell_mass > 0
    return float(-(cell_mass[keep] * np.log2(cell_mass[keep] / g[keep])).sum())


def local_projection_entropy(tree: MeasureTree, q: CubeIndex, y: Sequence[float], span: int) -> float:
    """H(mu^Q_theta(x_Q, y), D_span) for one cube, from the renormalized measure."""
    local = renormalize_to_unit(tree, q)
    theta = direction(q.center, y)
    return partition_entropy(project_tree(local, theta, out_level=span)).bits


def multiscale_entropy_bound(
    tree: MeasureTree,
    y: Sequence[float],
    schedule: ScaleSchedule,
    constant: float = LINEARIZATION_CONSTANT_BITS,
) -> MultiscaleBound:
    """
    Both sides of H(Delta_y mu, D_{m_k}) >= sum_j sum_Q mu(Q) H(mu^Q_theta, D_{d_j}) - C k.
    """
    schedule.require_within(tree.depth)
    schedule.require_linearizable()
    grid = discretize(tree, tree.depth)
    lhs = partition_entropy(pinned_pushforward(grid, y, schedule.last)).bits

    per_scale = tuple(
        local_projection_entropies(tree, y, m, d) for m, d in zip(schedule.values, schedule.gaps)
    )
    return MultiscaleBound(
        lhs=lhs,
        rhs_sum=float(sum(per_scale)),
        per_scale=per_scale,
        k=schedule.k,
        constant=constant,
    )


# ---------------------------------------------------------------------
# Dimension diagnostics
# ---------------------------------------------------------------------

def frostman_constant(tree: MeasureTree, s: float, delta: float) -> float:
    """max over levels m and cubes Q of mu(Q) * 2**((s - delta) m)."""
    best = 0.0
    for m, lv in enumerate(tree.levels):
        top = float(np.max(np.asarray(lv.masses, dtype=np.float64)))
        best = max(best, top * 2.0 ** ((s - delta) * m))
    return best


def covering_numbers(tree: MeasureTree) -> list[int]:
    """Number of positive-mass cubes at each level."""
    return [len(lv) for lv in tree.levels]


def covering_constant(tree: MeasureTree, s: float, delta: float) -> float:
    """max over levels of N_m / 2**((s + 2 delta) m)."""
    return max(n / 2.0 ** ((s + 2 * delta) * m) for m, n in enumerate(covering_numbers(tree)))


def box_dimension_profile(tree: MeasureTree) -> list[float]:
    """log2(N_m) / m for m >= 1."""
    return [log2(n) / m for m, n in enumerate(covering_numbers(tree)) if m >= 1]
