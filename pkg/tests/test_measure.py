from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from fractalmeter.engine.measure import (
    build_tree,
    cube_of_point,
    discretize,
    from_atoms,
    from_coords,
    leaf_position,
    mix,
    normalize,
    refine_uniform,
    renormalize_to_unit,
    restrict,
    restrict_leaves,
    subtree_leaves,
    truncate,
    with_mode,
)
from fractalmeter.engine.model import (
    CubeIndex,
    EmptyRestrictionError,
    MeasureError,
    Mode,
    OutOfResolutionError,
    ShapeMismatchError,
    SupportError,
    ZeroMassError,
)
from fractalmeter.engine.validate import validate_tree

from tests.strategies import exact_trees


def test_uniform_levels_are_exact(uniform_exact):
    for m, lv in enumerate(uniform_exact.levels):
        assert len(lv) == 4**m
        assert all(v == Fraction(1, 4**m) for v in lv.masses)
    assert uniform_exact.total == 1
    assert uniform_exact.is_normalized


@given(exact_trees())
@settings(max_examples=50, deadline=None)
def test_random_trees_are_consistent(tree):
    assert validate_tree(tree).ok
    assert tree.total == 1


def test_build_tree_sums_repeats_and_drops_zeros():
    tree = build_tree(1, 2, np.array([1, 1, 3, 0]), [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2), Fraction(0)], Mode.RATIONAL)
    assert tree.leaves.keys.tolist() == [1, 3]
    assert list(tree.leaves.masses) == [Fraction(1, 2), Fraction(1, 2)]


def test_build_tree_rejects_bad_input():
    with pytest.raises(MeasureError):
        build_tree(1, 2, np.array([0]), [-1.0])
    with pytest.raises(MeasureError):
        build_tree(1, 2, np.array([4]), [1.0])
    with pytest.raises(ZeroMassError):
        build_tree(1, 2, np.array([0]), [0.0])
    with pytest.raises(OutOfResolutionError):
        build_tree(2, 31, np.array([0]), [1.0])


def test_from_atoms_equal_weights():
    tree = from_atoms(2, 3, [(0.1, 0.1), (0.9, 0.9)], mode=Mode.RATIONAL)
    assert len(tree.leaves) == 2
    assert list(tree.leaves.masses) == [Fraction(1, 2), Fraction(1, 2)]


def test_discretize_keeps_total(three_branch_exact):
    for m in range(three_branch_exact.depth + 1):
        assert discretize(three_branch_exact, m).total == 1


def test_restrict_and_normalize(uniform_exact):
    cell = CubeIndex(2, 1, (0, 0))
    part = restrict(uniform_exact, [cell])
    assert part.total == Fraction(1, 4)
    assert normalize(part).total == 1
    assert len(part.leaves) == 16


def test_restrict_rejects_empty_and_mixed_levels(uniform_exact):
    with pytest.raises(EmptyRestrictionError):
        restrict(uniform_exact, [])
    with pytest.raises(MeasureError):
        restrict(uniform_exact, [CubeIndex(2, 1, (0, 0)), CubeIndex(2, 2, (0, 0))])
    with pytest.raises(EmptyRestrictionError):
        restrict_leaves(uniform_exact, np.zeros(len(uniform_exact.leaves), dtype=bool))
    with pytest.raises(ShapeMismatchError):
        restrict_leaves(uniform_exact, np.ones(3, dtype=bool))


def test_renormalized_uniform_is_uniform(uniform_exact):
    local = renormalize_to_unit(uniform_exact, CubeIndex(2, 1, (1, 0)))
    assert local.depth == 2
    assert local.total == 1
    assert all(v == Fraction(1, 16) for v in local.leaves.masses)
    assert local.leaves.keys.tolist() == list(range(16))


def test_renormalize_with_span(three_branch_exact):
    local = renormalize_to_unit(three_branch_exact, CubeIndex(2, 1, (1, 1)), span=2)
    assert local.depth == 2
    assert len(local.leaves) == 9
    with pytest.raises(OutOfResolutionError):
        renormalize_to_unit(three_branch_exact, CubeIndex(2, 1, (1, 1)), span=4)
    with pytest.raises(ZeroMassError):
        renormalize_to_unit(three_branch_exact, CubeIndex(2, 1, (0, 1)))


def test_truncate_and_refine(three_branch_exact):
    coarse = truncate(three_branch_exact, 2)
    assert coarse.depth == 2
    assert len(coarse.leaves) == 9
    fine = refine_uniform(coarse, 4)
    assert fine.depth == 4
    assert len(fine.leaves) == 9 * 16
    assert fine.total == 1
    assert validate_tree(fine).ok
    with pytest.raises(OutOfResolutionError):
        refine_uniform(three_branch_exact, 2)


def test_mix_is_convex(uniform_exact):
    other = from_coords(2, 3, np.array([[0, 0]]), [Fraction(1)], Mode.RATIONAL)
    mixed = mix(uniform_exact, other, Fraction(1, 2))
    assert mixed.total == 1
    assert mixed.mass(CubeIndex(2, 3, (0, 0))) == Fraction(1, 2) + Fraction(1, 128)
    with pytest.raises(ShapeMismatchError):
        mix(uniform_exact, truncate(uniform_exact, 2), 0.5)


def test_mode_round_trip(three_branch):
    exact = with_mode(three_branch, Mode.RATIONAL)
    assert exact.mode is Mode.RATIONAL
    back = with_mode(exact, Mode.FLOAT)
    assert np.array_equal(back.leaves.masses, three_branch.leaves.masses)


def test_points_and_subtrees(three_branch):
    cube = cube_of_point(three_branch, (0.01, 0.01), level=2)
    assert cube.coords == (0, 0)
    lo, hi = subtree_leaves(three_branch, cube)
    assert hi - lo == 3 ** (three_branch.depth - 2)
    assert 0 <= leaf_position(three_branch, (0.001, 0.001)) < len(three_branch.leaves)
    with pytest.raises(SupportError):
        cube_of_point(three_branch, (0.01, 0.9))
