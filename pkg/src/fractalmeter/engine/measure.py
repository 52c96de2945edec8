# src/fractalmeter/engine/measure.py

"""
Measure-core operations on sparse dyadic trees.

This module contains:
- tree construction from leaf tables and point atoms,
- discretization, restriction, normalization and renormalization,
- resolution changes (truncate, refine_uniform) and convex mixtures.

Every function is pure: inputs are never modified and every returned
tree satisfies the children-sum-to-parent invariant by construction.
"""

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import sparse
from .model import (
    CubeIndex,
    EmptyRestrictionError,
    GridMeasure,
    LevelSlice,
    MeasureError,
    MeasureTree,
    Mode,
    OutOfResolutionError,
    ShapeMismatchError,
    SupportError,
    ZeroMassError,
    mass_array,
)


# ---------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------

def build_tree(
    dim: int,
    depth: int,
    keys: np.ndarray,
    masses: Sequence | np.ndarray,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """
    Build a tree from leaf Morton keys at level `depth`.

    Notes:
    - Repeated keys are summed; zero-mass leaves are dropped.
    - Ancestors are aggregated bottom-up, so consistency holds exactly
      in rational mode and up to float summation in float mode.
    """
    if depth < 0 or depth > sparse.MAX_LEVEL.get(dim, -1):
        raise OutOfResolutionError(f"depth {depth} not supported in dimension {dim}")

    m = masses if isinstance(masses, np.ndarray) and _mode_matches(masses, mode) else mass_array(list(masses), mode)
    k = np.asarray(keys, dtype=np.int64)
    if len(k) != len(m):
        raise MeasureError("keys and masses must have equal length")
    if len(k) and (k.min() < 0 or k.max() >= (1 << (dim * depth))):
        raise MeasureError("leaf key out of range for depth")

    if len(m) and bool(np.any(m < 0)):
        raise MeasureError("masses must be non-negative")

    k, m = sparse.group_sum(k, m)
    keep = m != 0
    k, m = k[keep], m[keep]
    if len(k) == 0:
        raise ZeroMassError("a measure tree needs positive total mass")

    return _from_sorted_leaves(dim, depth, mode, k, m)


def from_coords(
    dim: int,
    depth: int,
    coords: np.ndarray,
    masses: Sequence | np.ndarray,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """Build a tree from leaf coordinates of shape (n, dim)."""
    return build_tree(dim, depth, sparse.encode(coords, dim, depth), masses, mode)


def from_atoms(
    dim: int,
    depth: int,
    points: Sequence[Sequence[float]],
    weights: Sequence | None = None,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """
    Tree of point atoms: each point's weight goes to the leaf containing it.

    Default weights are equal and sum to 1.
    """
    if not points:
        raise ZeroMassError("no atoms given")
    if weights is None:
        weights = [Fraction(1, len(points))] * len(points)
    coords = [CubeIndex.containing(tuple(p), dim, depth).coords for p in points]
    return from_coords(dim, depth, np.array(coords, dtype=np.int64), weights, mode)


def _mode_matches(masses: np.ndarray, mode: Mode) -> bool:
    return sparse.is_exact(masses) == (mode is Mode.RATIONAL)


def _from_sorted_leaves(
    dim: int,
    depth: int,
    mode: Mode,
    keys: np.ndarray,
    masses: np.ndarray,
) -> MeasureTree:
    levels: list[LevelSlice] = [LevelSlice(keys=keys, masses=masses)]
    k, m = keys, masses
    for _ in range(depth):
        k, m = sparse.group_sum(k >> dim, m)
        levels.append(LevelSlice(keys=k, masses=m))
    levels.reverse()
    return MeasureTree(dim=dim, depth=depth, mode=mode, levels=tuple(levels))


def _scaled(tree: MeasureTree, factor) -> MeasureTree:
    levels = tuple(LevelSlice(keys=lv.keys.copy(), masses=lv.masses * factor) for lv in tree.levels)
    return MeasureTree(dim=tree.dim, depth=tree.depth, mode=tree.mode, levels=levels)


def _check_level(tree: MeasureTree, m: int) -> None:
    if m < 0 or m > tree.depth:
        raise OutOfResolutionError(f"level {m} exceeds depth {tree.depth}")


# ---------------------------------------------------------------------
# Discretization and restriction
# ---------------------------------------------------------------------

def discretize(tree: MeasureTree, m: int) -> GridMeasure:
    """The level-m grid: the masses defining the discretization at scale 2**-m."""
    lv = tree.level(m)
    return GridMeasure(dim=tree.dim, level=m, mode=tree.mode, keys=lv.keys.copy(), masses=lv.masses.copy())


def restrict(tree: MeasureTree, cells: Iterable[CubeIndex]) -> MeasureTree:
    """
    Restriction to a union of same-level cubes (not renormalized).
    """
    cells = list(cells)
    if not cells:
        raise EmptyRestrictionError("no cells selected")

    level = cells[0].level
    for c in cells:
        if c.level != level:
            raise MeasureError("restriction cells must share one level")
        if c.dim != tree.dim:
            raise ShapeMismatchError("cell dimension does not match tree")
    _check_level(tree, level)

    selected = np.unique(np.array([c.key for c in cells], dtype=np.int64))
    anc = sparse.ancestor_keys(tree.leaves.keys, tree.dim, tree.depth - level)
    return restrict_leaves(tree, np.isin(anc, selected))


def restrict_leaves(tree: MeasureTree, mask: np.ndarray) -> MeasureTree:
    """Restriction to the leaves where `mask` is True (not renormalized)."""
    mask = np.asarray(mask, dtype=bool)
    if len(mask) != len(tree.leaves):
        raise ShapeMismatchError("mask length must equal the number of leaves")
    if not mask.any():
        raise EmptyRestrictionError("restriction selects no positive mass")
    lv = tree.leaves
    return _from_sorted_leaves(tree.dim, tree.depth, tree.mode, lv.keys[mask], lv.masses[mask])


def normalize(tree: MeasureTree) -> MeasureTree:
    total = tree.total
    if total == 0:
        raise ZeroMassError("cannot normalize a zero measure")
    if tree.mode is Mode.RATIONAL:
        return _scaled(tree, Fraction(1) / total)
    return _scaled(tree, 1.0 / float(total)) if total != 1.0 else tree


def renormalize_to_unit(tree: MeasureTree, q: CubeIndex, span: int | None = None) -> MeasureTree:
    """
    The renormalized measure on Q: mu restricted to Q, normalized, and
    rescaled onto [0, 1)**dim by the homothety taking Q to the unit cube.

    The result has depth tree.depth - q.level, or `span` when given
    (the renormalized measure seen at resolution 2**-span).
    """
    _check_level(tree, q.level)
    depth = tree.depth - q.level if span is None else span
    if depth < 0 or q.level + depth > tree.depth:
        raise OutOfResolutionError(f"span {span} below level {q.level} exceeds depth {tree.depth}")
    mq = tree.mass(q)
    if mq == 0:
        raise ZeroMassError(f"cube {q.coords} at level {q.level} has zero mass")

    inv = Fraction(1) / mq if tree.mode is Mode.RATIONAL else 1.0 / float(mq)
    qkey = q.key
    levels = []
    for j in range(depth + 1):
        lv = tree.levels[q.level + j]
        lo, hi = sparse.prefix_range(lv.keys, qkey, tree.dim, j)
        local = lv.keys[lo:hi] - (qkey << (tree.dim * j))
        levels.append(LevelSlice(keys=local, masses=lv.masses[lo:hi] * inv))
    return MeasureTree(dim=tree.dim, depth=depth, mode=tree.mode, levels=tuple(levels))


def subtree_leaves(tree: MeasureTree, q: CubeIndex) -> tuple[int, int]:
    """[lo, hi) positions in tree.leaves of the leaves inside Q."""
    _check_level(tree, q.level)
    return sparse.prefix_range(tree.leaves.keys, q.key, tree.dim, tree.depth - q.level)


# ---------------------------------------------------------------------
# Resolution changes and mixtures
# ---------------------------------------------------------------------

def truncate(tree: MeasureTree, m: int) -> MeasureTree:
    """The same measure seen only down to resolution 2**-m."""
    _check_level(tree, m)
    return MeasureTree(dim=tree.dim, depth=m, mode=tree.mode, levels=tree.levels[: m + 1])


def refine_uniform(tree: MeasureTree, depth: int) -> MeasureTree:
    """
    The discretization at the current depth, represented as a deeper tree:
    every leaf mass is spread uniformly over its descendants.
    """
    if depth < tree.depth:
        raise OutOfResolutionError("refine_uniform cannot reduce depth")
    if depth > sparse.MAX_LEVEL[tree.dim]:
        raise OutOfResolutionError(f"depth {depth} not supported in dimension {tree.dim}")

    n_children = 1 << tree.dim
    share = Fraction(1, n_children) if tree.mode is Mode.RATIONAL else 1.0 / n_children
    offsets = np.arange(n_children, dtype=np.int64)

    levels = list(tree.levels)
    k, m = tree.leaves.keys, tree.leaves.masses
    for _ in range(depth - tree.depth):
        k = ((k[:, None] << tree.dim) | offsets[None, :]).ravel()
        m = np.repeat(m * share, n_children)
        levels.append(LevelSlice(keys=k, masses=m))
    return MeasureTree(dim=tree.dim, depth=depth, mode=tree.mode, levels=tuple(levels))


def mix(a: MeasureTree, b: MeasureTree, t) -> MeasureTree:
    """Convex combination t*a + (1 - t)*b of two trees of the same shape."""
    if (a.dim, a.depth, a.mode) != (b.dim, b.depth, b.mode):
        raise ShapeMismatchError("mixed trees must share dim, depth and mode")
    if not 0 <= t <= 1:
        raise MeasureError("mixing weight must lie in [0, 1]")

    if a.mode is Mode.RATIONAL:
        t = Fraction(t)
    else:
        t = float(t)
    keys = np.concatenate([a.leaves.keys, b.leaves.keys])
    masses = np.concatenate([a.leaves.masses * t, b.leaves.masses * (1 - t)])
    return build_tree(a.dim, a.depth, keys, masses, a.mode)


def with_mode(tree: MeasureTree, mode: Mode) -> MeasureTree:
    """Convert a tree between numeric modes (float to rational is exact binary)."""
    if tree.mode is mode:
        return tree
    lv = tree.leaves
    masses = mass_array(list(lv.masses), mode) if mode is Mode.RATIONAL else np.asarray(lv.masses, dtype=np.float64)
    return _from_sorted_leaves(tree.dim, tree.depth, mode, lv.keys.copy(), masses)


# ---------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------

def cube_of_point(tree: MeasureTree, x: Sequence[float], level: int | None = None) -> CubeIndex:
    """
    The level cube (default: leaf) containing x; x must carry positive mass.
    """
    level = tree.depth if level is None else level
    _check_level(tree, level)
    cube = CubeIndex.containing(tuple(x), tree.dim, level)
    if tree.mass(cube) == 0:
        raise SupportError(f"point {tuple(x)} is outside the support")
    return cube


def leaf_position(tree: MeasureTree, x: Sequence[float]) -> int:
    """Index into tree.leaves of the positive-mass leaf containing x."""
    key = cube_of_point(tree, x).key
    return int(np.searchsorted(tree.leaves.keys, key))
