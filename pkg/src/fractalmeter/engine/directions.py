# src/fractalmeter/engine/directions.py

"""
Direction sets and vantage-point search.

This module contains:
- the per-point direction set: the sampled angles theta passing
  ||Pi_theta mu^{x,j}||_2**2 <= 2**(eps d_j) E_s(mu^{x,j}) at every scale
  j0 <= j < k, mu^{x,j} the renormalized measure on the level-m_j cube
  of x seen at resolution 2**-d_j,
- a table of direction sets for every cube of the deepest scale,
- the vantage score of a pin and the search over candidate pins,
- a Monte Carlo estimate of the direction incidence of two measures.

This module does NOT build the pinned-distance pushforward; see pinned.py.
"""

import logging
from dataclasses import dataclass
from math import pi
from typing import Final, Sequence

import numpy as np

from . import sparse
from .energy import dyadic_energy, local_energies
from .kernels import line_integrals, projection_l2_sweep
from .measure import cube_of_point, discretize, renormalize_to_unit
from .model import (
    CubeIndex,
    Direction,
    MeasureError,
    MeasureTree,
    angle_grid,
)
from .pinned import require_separated
from .projection import projection_norms
from .schedule import ScaleSchedule
from ..utils.parallel import ordered_map
from ..utils.rng import StableRng


logger = logging.getLogger(__name__)

DEFAULT_N_ANGLES: Final[int] = 1024
DEFAULT_TAU: Final[float] = 0.05
DEFAULT_SAMPLES: Final[int] = 4096


# ---------------------------------------------------------------------
# Direction sets
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True, eq=False)
class DirectionSet:
    """
    Pass/fail masks of one anchor point over the sampled angle grid.

    masks[i] belongs to scale scales[i] (gap gaps[i]); the direction set
    is their conjunction.
    """

    anchor: tuple[float, ...]
    angles: np.ndarray
    scales: tuple[int, ...]
    gaps: tuple[int, ...]
    masks: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        if len(self.scales) == 0:
            return np.ones(len(self.angles), dtype=bool)
        return self.masks.all(axis=0)

    @property
    def pass_fractions(self) -> tuple[float, ...]:
        return tuple(float(row.mean()) for row in self.masks)

    def contains(self, theta: Direction) -> bool:
        return bool(self.mask[theta.grid_index(len(self.angles))])


@dataclass(frozen=True, slots=True, eq=False)
class DirectionSetTable:
    """
    Direction-set masks for every positive-mass cube of `level`, the level
    of the deepest scale used. Rows follow the cube keys in `keys`.

    fail_fractions[i] is the mass-weighted fraction of sampled angles
    failing at scale scales[i].
    """

    dim: int
    level: int
    angles: np.ndarray
    scales: tuple[int, ...]
    gaps: tuple[int, ...]
    keys: np.ndarray
    masks: np.ndarray
    fail_fractions: tuple[float, ...]

    def row_of(self, x: Sequence[float]) -> np.ndarray:
        key = CubeIndex.containing(tuple(x), self.dim, self.level).key
        i = int(np.searchsorted(self.keys, key))
        if i >= len(self.keys) or int(self.keys[i]) != key:
            raise MeasureError(f"point {tuple(x)} is not in a tabulated cube")
        return self.masks[i]


def _scales(schedule: ScaleSchedule, j0: int) -> list[int]:
    if j0 < 0:
        raise MeasureError("j0 must be >= 0")
    if not schedule.vantage_admissible(j0):
        logger.warning(
            "schedule %s is not vantage-admissible from j0=%d (needs j0 >= %d)",
            schedule.values,
            j0,
            schedule.vantage_j1,
        )
    return list(range(j0, schedule.k))


def _level_masks(
    tree: MeasureTree,
    level: int,
    span: int,
    s: float,
    eps: float,
    angles: np.ndarray,
    only: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Pass masks of every positive-mass cube of `level` at gap `span`, or of
    the single cube with key `only`. Returns (cube keys, masks).
    """
    keys, energies = local_energies(tree, level, span, s)
    if only is not None:
        sel = np.flatnonzero(keys == only)
        keys, energies = keys[sel], energies[sel]

    fine = tree.level(level + span)
    owners = sparse.ancestor_keys(fine.keys, tree.dim, span)
    starts = np.searchsorted(owners, keys, side="left")
    stops = np.searchsorted(owners, keys, side="right")

    coords = sparse.decode(fine.keys, tree.dim, level + span)
    owner_coords = coords >> span
    points = np.ascontiguousarray((coords - (owner_coords << span) + 0.5) * 2.0**-span)
    masses = np.asarray(fine.masses, dtype=np.float64)
    cosines, sines = np.cos(angles), np.sin(angles)
    bound = 2.0 ** (eps * span) * energies

    def one(i: int) -> np.ndarray:
        a, b = int(starts[i]), int(stops[i])
        m = masses[a:b]
        norms = projection_l2_sweep(points[a:b], m / m.sum(), cosines, sines, span)
        return norms <= bound[i]

    rows = ordered_map(one, range(len(keys)))
    masks = np.array(rows, dtype=bool).reshape(len(keys), len(angles))
    return keys, masks


def direction_set(
    tree: MeasureTree,
    x: Sequence[float],
    schedule: ScaleSchedule,
    s: float,
    eps: float,
    j0: int | None = None,
    n_angles: int = DEFAULT_N_ANGLES,
) -> DirectionSet:
    """The direction set of a point x in the support of a planar tree."""
    if tree.dim != 2:
        raise MeasureError("direction sets need a planar measure")
    schedule.require_within(tree.depth)
    cube_of_point(tree, x)
    j0 = schedule.default_j0() if j0 is None else j0
    angles = angle_grid(n_angles)

    scales = _scales(schedule, j0)
    gaps = tuple(schedule.gaps[j] for j in scales)
    rows = []
    for j, d in zip(scales, gaps):
        m = schedule.values[j]
        key = CubeIndex.containing(tuple(x), tree.dim, m).key
        _, masks = _level_masks(tree, m, d, s, eps, angles, only=key)
        rows.append(masks[0])
    masks = np.array(rows, dtype=bool).reshape(len(scales), n_angles)
    return DirectionSet(anchor=tuple(x), angles=angles, scales=tuple(scales), gaps=gaps, masks=masks)


def direction_set_naive(
    tree: MeasureTree,
    x: Sequence[float],
    schedule: ScaleSchedule,
    s: float,
    eps: float,
    j0: int | None = None,
    n_angles: int = DEFAULT_N_ANGLES,
) -> DirectionSet:
    """
    direction_set built from renormalize_to_unit, discretize and the
    projection norms one cube at a time (reference for the table).
    """
    cube_of_point(tree, x)
    j0 = schedule.default_j0() if j0 is None else j0
    angles = angle_grid(n_angles)
    scales = _scales(schedule, j0)
    gaps = tuple(schedule.gaps[j] for j in scales)
    rows = []
    for j, d in zip(scales, gaps):
        cube = CubeIndex.containing(tuple(x), tree.dim, schedule.values[j])
        local = renormalize_to_unit(tree, cube, span=d)
        norms = projection_norms(discretize(local, d), angles, out_level=d)
        rows.append(norms <= 2.0 ** (eps * d) * float(dyadic_energy(local, s)))
    masks = np.array(rows, dtype=bool).reshape(len(scales), n_angles)
    return DirectionSet(anchor=tuple(x), angles=angles, scales=tuple(scales), gaps=gaps, masks=masks)


def direction_set_table(
    tree: MeasureTree,
    schedule: ScaleSchedule,
    s: float,
    eps: float,
    j0: int | None = None,
    n_angles: int = DEFAULT_N_ANGLES,
) -> DirectionSetTable:
    if tree.dim != 2:
        raise MeasureError("direction sets need a planar measure")
    schedule.require_within(tree.depth)
    j0 = schedule.default_j0() if j0 is None else j0
    angles = angle_grid(n_angles)
    scales = _scales(schedule, j0)
    gaps = tuple(schedule.gaps[j] for j in scales)

    level = schedule.values[scales[-1]] if scales else 0
    table_keys = tree.level(level).keys.copy()
    masks = np.ones((len(table_keys), n_angles), dtype=bool)
    table_mass = np.asarray(tree.level(level).masses, dtype=np.float64)

    fail = []
    for j, d in zip(scales, gaps):
        m = schedule.values[j]
        keys, rows = _level_masks(tree, m, d, s, eps, angles)
        owner = np.searchsorted(keys, sparse.ancestor_keys(table_keys, tree.dim, level - m))
        masks &= rows[owner]
        weights = np.asarray(tree.level(m).masses, dtype=np.float64)
        fraction = float((weights * (~rows).mean(axis=1)).sum() / weights.sum())
        fail.append(fraction)
        logger.info("scale j=%d m=%d d=%d: failing fraction %.4f", j, m, d, fraction)

    return DirectionSetTable(
        dim=tree.dim,
        level=level,
        angles=angles,
        scales=tuple(scales),
        gaps=gaps,
        keys=table_keys,
        masks=masks,
        fail_fractions=tuple(fail),
    )


# ---------------------------------------------------------------------
# Vantage points
# ---------------------------------------------------------------------

def _angle_index(vectors: np.ndarray, n_angles: int) -> np.ndarray:
    angles = np.mod(np.arctan2(vectors[:, 1], vectors[:, 0]), 2 * pi)
    return np.rint(angles * n_angles / (2 * pi)).astype(np.int64) % n_angles


def vantage_mask(tree: MeasureTree, y: Sequence[float], table: DirectionSetTable) -> np.ndarray:
    """
    Per leaf: does theta(x, y), x the leaf centre, lie in the direction set
    of x (nearest sampled angle)?
    """
    grid = discretize(tree, tree.depth)
    require_separated(grid, y, 2.0**-tree.depth)

    lv = tree.leaves
    idx = _angle_index(tree.centers() - np.asarray(y[:2], dtype=np.float64), len(table.angles))
    owner = np.searchsorted(table.keys, sparse.ancestor_keys(lv.keys, tree.dim, tree.depth - table.level))
    return table.masks[owner, idx]


def vantage_score(tree: MeasureTree, y: Sequence[float], table: DirectionSetTable) -> float:
    """mu{x : theta(x, y) in Theta_x}, relative to the total mass."""
    hit = vantage_mask(tree, y, table)
    masses = np.asarray(tree.leaves.masses, dtype=np.float64)
    return float(masses[hit].sum() / masses.sum())


@dataclass(frozen=True, slots=True)
class VantageResult:
    point: tuple[float, ...]
    score: float
    index: int
    scores: tuple[float, ...]


def vantage_search(
    tree: MeasureTree,
    candidates: Sequence[Sequence[float]],
    schedule: ScaleSchedule,
    s: float,
    eps: float,
    j0: int | None = None,
    n_angles: int = DEFAULT_N_ANGLES,
    table: DirectionSetTable | None = None,
) -> VantageResult:
    """Best-scoring candidate pin; ties go to the lowest index."""
    if not candidates:
        raise MeasureError("no vantage candidates given")
    if table is None:
        table = direction_set_table(tree, schedule, s, eps, j0, n_angles)

    scores = ordered_map(lambda y: vantage_score(tree, y, table), candidates)
    best = 0
    for i, v in enumerate(scores):
        if v > scores[best]:
            best = i
    logger.info("vantage search: best candidate %d of %d, score %.4f", best, len(scores), scores[best])
    return VantageResult(
        point=tuple(float(c) for c in candidates[best]),
        score=scores[best],
        index=best,
        scores=tuple(scores),
    )


# ---------------------------------------------------------------------
# Direction incidence
# ---------------------------------------------------------------------

def direction_incidence(
    mu: MeasureTree,
    nu: MeasureTree,
    tau: float = DEFAULT_TAU,
    n_angles: int = DEFAULT_N_ANGLES,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> float:
    """
    Monte Carlo estimate of (mu x sigma){(y, theta) : nu_{theta, y} >= tau}.

    y is drawn from mu (a leaf by mass, then uniformly inside it), theta
    uniformly from the angle grid; the slice is the line integral of the
    density of nu along the line through y with direction theta.
    """
    if tau < 0:
        raise MeasureError("tau must be >= 0")
    if tau == 0:
        return 1.0
    if mu.dim != 2 or nu.dim != 2:
        raise MeasureError("direction incidence needs planar measures")

    rng = StableRng(seed)
    lv = mu.leaves
    cumulative = np.cumsum(np.asarray(lv.masses, dtype=np.float64))
    leaf = rng.choice(cumulative, n_samples)
    corner = sparse.decode(lv.keys[leaf], 2, mu.depth) * 2.0**-mu.depth
    jitter = np.stack([rng.uniform(n_samples), rng.uniform(n_samples)], axis=1) * 2.0**-mu.depth
    points = np.ascontiguousarray(corner + jitter)

    angle_idx = (rng.raw(n_samples) % np.uint64(n_angles)).astype(np.int64)
    angles = 2.0 * pi * angle_idx / n_angles

    density = discretize(nu, nu.depth).density()
    slices = line_integrals(density, points, angles)
    return float(np.mean(slices >= tau))


def incidence_bound(mu: MeasureTree, nu: MeasureTree, s: float) -> float:
    """(E_s(mu) E_s(nu)) ** (-1 / (s - 1)), the comparison scale for s > 1."""
    if s <= 1:
        raise MeasureError("the incidence bound needs s > 1")
    e = float(dyadic_energy(mu, s)) * float(dyadic_energy(nu, s))
    return e ** (-1.0 / (s - 1.0))
