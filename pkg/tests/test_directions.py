from math import pi

import numpy as np
import pytest

from fractalmeter.engine.directions import (
    direction_incidence,
    direction_set,
    direction_set_naive,
    direction_set_table,
    incidence_bound,
    vantage_score,
    vantage_search,
)
from fractalmeter.engine.experiment import candidate_grid
from fractalmeter.engine.generators import branching_measure, line_measure
from fractalmeter.engine.model import Direction, MeasureError
from fractalmeter.engine.schedule import ScaleSchedule


SPARSE = ScaleSchedule.from_values((0, 4, 10))
ANCHOR = (0.5, 0.5)


@pytest.fixture(scope="module")
def segment():
    return line_measure(10, y=0.5)


@pytest.fixture(scope="module")
def segment_table(segment):
    return direction_set_table(segment, SPARSE, 1.5, 0.1, n_angles=64)


def test_segment_fails_only_across_itself(segment):
    found = direction_set(segment, ANCHOR, SPARSE, 1.5, 0.1, n_angles=64)
    assert found.scales == (1,)
    assert found.gaps == (6,)
    assert found.contains(Direction.of(0.0))
    assert found.contains(Direction.of(pi))
    assert not found.contains(Direction.of(pi / 2))
    assert not found.contains(Direction.of(3 * pi / 2))
    assert int((~found.mask).sum()) == 2
    assert found.pass_fractions == pytest.approx((62 / 64,))


def test_naive_and_batched_sets_agree(segment):
    for x in [ANCHOR, (0.1, 0.5), (0.93, 0.5)]:
        fast = direction_set(segment, x, SPARSE, 1.5, 0.1, n_angles=64)
        slow = direction_set_naive(segment, x, SPARSE, 1.5, 0.1, n_angles=64)
        assert np.array_equal(fast.mask, slow.mask)


def test_table_rows_match_direction_sets(segment, segment_table):
    assert segment_table.level == 4
    assert len(segment_table.keys) == 16
    for x in [ANCHOR, (0.3, 0.5), (0.01, 0.5)]:
        found = direction_set(segment, x, SPARSE, 1.5, 0.1, n_angles=64)
        assert np.array_equal(segment_table.row_of(x), found.mask)
    assert segment_table.fail_fractions == pytest.approx((2 / 64,))
    with pytest.raises(MeasureError):
        segment_table.row_of((0.5, 0.9))


def test_uniform_passes_everywhere(uniform):
    found = direction_set(uniform, (0.3, 0.6), ScaleSchedule.from_values((0, 2, 4)), 1.5, 0.1, n_angles=64)
    assert found.mask.all()


def test_empty_scale_range_passes_everything(uniform):
    schedule = ScaleSchedule.from_values((0, 2, 4))
    found = direction_set(uniform, (0.3, 0.6), schedule, 1.5, 0.1, j0=2, n_angles=16)
    assert found.scales == ()
    assert found.mask.all()


def test_inadmissible_start_warns(uniform, caplog):
    schedule = ScaleSchedule.hyperdyadic(0.5, 4)
    direction_set(uniform, (0.3, 0.6), schedule, 1.5, 0.1, n_angles=16)
    assert "not vantage-admissible" in caplog.text


def test_direction_sets_need_planar_support(uniform):
    line = branching_measure([0, 1], 4, dim=1)
    with pytest.raises(MeasureError):
        direction_set(line, (0.5,), ScaleSchedule.from_values((0, 2, 4)), 0.5, 0.1)


def test_vantage_scores(segment, segment_table):
    beside = vantage_score(segment, (-0.5, 0.5001), segment_table)
    below = vantage_score(segment, (0.5, -0.5), segment_table)
    assert beside == pytest.approx(1.0)
    assert 0.0 < below < 1.0

    result = vantage_search(segment, [(0.5, -0.5), (-0.5, 0.5001)], SPARSE, 1.5, 0.1, table=segment_table)
    assert result.index == 1
    assert result.point == (-0.5, 0.5001)
    assert result.scores == pytest.approx((below, beside))


def test_vantage_ties_go_to_first_candidate(uniform):
    schedule = ScaleSchedule.from_values((0, 2, 4))
    result = vantage_search(uniform, [(-0.5, -0.5), (1.5, 1.5)], schedule, 1.5, 0.1, n_angles=32)
    assert result.index == 0
    assert result.score == pytest.approx(1.0)
    with pytest.raises(MeasureError):
        vantage_search(uniform, [], schedule, 1.5, 0.1)


def test_direction_incidence(uniform):
    assert direction_incidence(uniform, uniform, tau=0.0) == 1.0
    assert direction_incidence(uniform, uniform, tau=1e-6, n_samples=512) >= 0.99
    assert direction_incidence(uniform, uniform, tau=2.0, n_samples=512) == 0.0
    a = direction_incidence(uniform, uniform, tau=1.0, n_samples=512, seed=3)
    assert a == direction_incidence(uniform, uniform, tau=1.0, n_samples=512, seed=3)
    assert 0.0 < a < 1.0
    with pytest.raises(MeasureError):
        direction_incidence(uniform, uniform, tau=-1.0)


def test_incidence_bound(uniform):
    assert incidence_bound(uniform, uniform, 1.5) == pytest.approx(2.5607 ** (-4.0), rel=1e-3)
    with pytest.raises(MeasureError):
        incidence_bound(uniform, uniform, 1.0)


def test_single_leaf_chain_fails_every_direction():
    point = branching_measure([0], 6)
    x = (2.0**-7, 2.0**-7)
    found = direction_set(point, x, ScaleSchedule.from_values((0, 3, 6)), s=0.5, eps=0.1, j0=0)
    assert found.masks.size > 0
    assert not found.masks.any()


@pytest.mark.slow
def test_three_branch_vantage_is_pinned(baselines):
    tree = branching_measure([0, 1, 3], 10)
    # the origin corner of [-1, 0]**2 touches the support
    candidates = candidate_grid(-1.0, -0.125, 8)
    result = vantage_search(tree, candidates, ScaleSchedule.hyperdyadic(0.3, 10), 1.5, 0.3)
    assert result.score == max(result.scores)
    baselines.check("vantage-three-branch-depth10", [result.index, *result.point])
