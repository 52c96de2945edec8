from math import log2

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalmeter.engine.entropy import (
    conditional_entropy,
    entropy_lower_bound_from_l2,
    entropy_of_masses,
    interval_conditional_entropy,
    normalized_entropy,
    partition_entropy,
    shifted_partition_entropy,
)
from fractalmeter.engine.generators import branching_measure
from fractalmeter.engine.measure import discretize, mix, restrict
from fractalmeter.engine.model import CubeIndex, MeasureError, OutOfResolutionError, dense_line

from tests.strategies import float_trees


def test_entropy_of_masses_skips_zeros():
    assert entropy_of_masses([0.5, 0.5, 0.0]) == pytest.approx(1.0)
    assert entropy_of_masses([1.0]) == 0.0


def test_uniform_entropy(uniform):
    for m in range(uniform.depth + 1):
        assert partition_entropy(discretize(uniform, m)).bits == pytest.approx(2.0 * m)
    assert normalized_entropy(discretize(uniform, 3)) == pytest.approx(2.0)


def test_three_branch_entropy(three_branch):
    assert normalized_entropy(discretize(three_branch, 5)) == pytest.approx(log2(3))
    value = conditional_entropy(three_branch, 4, 2)
    assert value.bits == pytest.approx(2 * log2(3))
    assert (value.fine_level, value.coarse_level) == (4, 2)


def test_rational_grids_give_float_entropy(three_branch_exact):
    value = partition_entropy(discretize(three_branch_exact, 3))
    assert isinstance(value.bits, float)
    assert float(value) == pytest.approx(3 * log2(3))


def test_l2_bound_is_tight_for_uniform_splitting(uniform, three_branch):
    assert entropy_lower_bound_from_l2(discretize(uniform, 3)) == pytest.approx(2.0)
    assert entropy_lower_bound_from_l2(discretize(three_branch, 4)) == pytest.approx(log2(3))


@given(float_trees(max_depth=4))
@settings(max_examples=40, deadline=None)
def test_chain_rule_and_bounds(tree):
    for coarse in range(tree.depth + 1):
        for fine in range(coarse, tree.depth + 1):
            total = partition_entropy(discretize(tree, fine)).bits
            split = partition_entropy(discretize(tree, coarse)).bits + conditional_entropy(tree, fine, coarse).bits
            assert total == pytest.approx(split, abs=1e-9)
            assert 0.0 <= total <= tree.dim * fine + 1e-9
        if coarse >= 1:
            grid = discretize(tree, coarse)
            assert entropy_lower_bound_from_l2(grid) <= normalized_entropy(grid) + 1e-9


def test_probability_required(uniform):
    part = restrict(uniform, [CubeIndex(2, 1, (0, 0))])
    with pytest.raises(MeasureError):
        partition_entropy(discretize(part, 2))
    with pytest.raises(MeasureError):
        conditional_entropy(uniform, 1, 2)
    with pytest.raises(MeasureError):
        normalized_entropy(discretize(uniform, 0))


def test_shifted_partition_on_the_line():
    line = branching_measure([0, 1], 4, dim=1)
    assert shifted_partition_entropy(line, 1).bits == pytest.approx(1.5)
    with pytest.raises(OutOfResolutionError):
        shifted_partition_entropy(line, 4)


def test_interval_conditional_entropy():
    grid = dense_line(3, np.arange(8), np.full(8, 1 / 8))
    assert interval_conditional_entropy(grid, 3, 1).bits == pytest.approx(2.0)
    assert interval_conditional_entropy(grid, 2, 0).bits == pytest.approx(2.0)
    with pytest.raises(OutOfResolutionError):
        interval_conditional_entropy(grid, 4, 1)


def test_interval_conditional_entropy_with_negative_indices():
    grid = dense_line(2, np.array([-2, -1, 0, 1]), np.full(4, 0.25))
    assert interval_conditional_entropy(grid, 2, 1).bits == pytest.approx(1.0)


@given(float_trees(max_depth=4))
@settings(max_examples=40, deadline=None)
def test_shifted_grid_moves_entropy_by_at_most_dim_bits(tree):
    for m in range(tree.depth):
        plain = partition_entropy(discretize(tree, m)).bits
        shifted = shifted_partition_entropy(tree, m).bits
        assert abs(shifted - plain) <= tree.dim + 1e-9


@given(st.data(), st.sampled_from([0.25, 0.5, 0.75]))
@settings(max_examples=40, deadline=None)
def test_entropy_is_concave_under_mixing(data, t):
    a = data.draw(float_trees(max_depth=4))
    b = data.draw(float_trees(dims=(a.dim,), depth=a.depth))
    mixed = mix(a, b, t)
    for m in range(a.depth + 1):
        h_mixed = partition_entropy(discretize(mixed, m)).bits
        h_a = partition_entropy(discretize(a, m)).bits
        h_b = partition_entropy(discretize(b, m)).bits
        assert h_mixed >= t * h_a + (1 - t) * h_b - 2.0**-30
