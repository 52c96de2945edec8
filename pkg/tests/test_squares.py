from fractions import Fraction

import numpy as np
import pytest

from fractalmeter.engine.measure import restrict, restrict_leaves, truncate
from fractalmeter.engine.model import CubeIndex, ScheduleError, ShapeMismatchError
from fractalmeter.engine.squares import bad_mass_profile, classify_squares, good_square_entropy


def test_unweighted_uniform_is_all_heavy_and_good(uniform):
    result = classify_squares(uniform, uniform, level=2, s1=1.5, delta=0.25, span=2)
    assert len(result.labels) == 16
    assert result.heavy_count == 16
    assert result.good_count == 16
    assert result.bad_mass == 0
    assert result.light_mass == 0
    assert result.light_bound_holds
    assert result.heavy_threshold == pytest.approx(2.0**-5.5)


def test_energy_cap_marks_squares_bad(uniform):
    result = classify_squares(uniform, uniform, level=2, s1=1.5, delta=0.05, span=2)
    assert result.good_count == 0
    assert all(q.local_energy == pytest.approx(2.5607, rel=1e-4) for q in result.labels)
    assert result.heavy_count == 0
    assert float(result.light_mass) == pytest.approx(1.0)
    assert result.light_bound_holds


def test_restriction_drops_squares(uniform):
    weighted = restrict(uniform, [CubeIndex(2, 1, (0, 0))])
    result = classify_squares(uniform, weighted, level=2, s1=1.5, delta=0.25, span=2)
    assert result.good_count == 4
    assert float(result.good_mass) == pytest.approx(0.25)
    assert float(result.bad_mass) == 0.0
    assert {q.cube.coords for q in result.labels if q.good} == {(0, 0), (1, 0), (0, 1), (1, 1)}


def test_thin_retention_is_bad(uniform):
    mask = np.zeros(len(uniform.leaves), dtype=bool)
    mask[0] = True
    mask[240:] = True
    weighted = restrict_leaves(uniform, mask)
    result = classify_squares(uniform, weighted, level=2, s1=1.5, delta=0.25, span=2)
    assert result.good_count == 1
    assert float(result.bad_mass) == pytest.approx(1 / 256)
    assert bad_mass_profile([result]) == pytest.approx([1 / 17])


def test_exact_accounting(uniform_exact):
    result = classify_squares(uniform_exact, uniform_exact, level=1, s1=1.5, delta=0.25, span=2)
    assert result.good_mass == Fraction(1)
    assert result.bad_mass == Fraction(0)
    assert result.light_bound_holds


def test_reweighting_must_match(uniform, three_branch):
    with pytest.raises(ShapeMismatchError):
        classify_squares(uniform, truncate(uniform, 3), 1, 1.5, 0.25, 1)
    with pytest.raises(ShapeMismatchError):
        classify_squares(truncate(three_branch, 4), uniform, 1, 1.5, 0.25, 1)
    with pytest.raises(ScheduleError):
        classify_squares(uniform, uniform, 3, 1.5, 0.25, 2)


def test_good_square_entropy(uniform):
    result = classify_squares(uniform, uniform, level=2, s1=1.5, delta=0.25, span=2)
    value = good_square_entropy(uniform, result, (-0.5, -0.5))
    assert 0.0 < value <= 2.0
    flat = classify_squares(uniform, uniform, level=2, s1=1.5, delta=0.25, span=0)
    assert good_square_entropy(uniform, flat, (-0.5, -0.5)) is None
