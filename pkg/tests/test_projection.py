from fractions import Fraction
from math import pi, sqrt

import numpy as np
import pytest

from fractalmeter.engine.energy import dyadic_energy, l2_norm_sq
from fractalmeter.engine.generators import branching_measure
from fractalmeter.engine.measure import discretize
from fractalmeter.engine.model import Direction, ExponentError, MeasureError, ShapeMismatchError, dense_line
from fractalmeter.engine.projection import (
    adaptive_angle_mean,
    angle_sweep,
    disintegrated_total,
    grid_atoms,
    l2_comparison,
    line_support_length,
    marstrand_integral,
    project_grid,
    project_tree,
    projection_norms,
    slice_measure,
    sobolev_norm_sq,
)


def test_rational_projection_keeps_mass(uniform_exact):
    grid = discretize(uniform_exact, 3)
    line = project_grid(grid, Direction.of(0.0))
    assert line.level == 3
    assert line.total == 1
    assert list(line.masses) == [Fraction(1, 8)] * 8

    diagonal = project_grid(grid, Direction.of(pi / 4), subdiv=1)
    assert diagonal.total == 1


def test_sub_atoms(uniform_exact):
    points, masses = grid_atoms(discretize(uniform_exact, 1), subdiv=2)
    assert points.shape == (64, 2)
    assert masses.sum() == 1
    with pytest.raises(ShapeMismatchError):
        grid_atoms(discretize(branching_measure([0, 1], 3, dim=1), 3))


def test_project_tree_bins_at_requested_level(three_branch):
    line = project_tree(three_branch, Direction.of(0.0), out_level=2)
    assert line.level == 2
    assert float(line.total) == pytest.approx(1.0)


def test_l2_comparison_for_uniform(uniform):
    result = l2_comparison(discretize(uniform, 4), Direction.of(0.0))
    assert result.centres == pytest.approx(1.0)
    assert result.density == pytest.approx(1.0)
    assert result.ratio == pytest.approx(1.0)


def test_sweep_matches_binned_projection(three_branch):
    grid = discretize(three_branch, 5)
    angles = np.array([0.3, 1.1, 2.0])
    sweep = projection_norms(grid, angles)
    for a, value in zip(angles, sweep):
        expected = float(l2_norm_sq(project_grid(grid, Direction.of(float(a)))))
        assert value == pytest.approx(expected)


def test_sobolev_gamma_zero_is_l2_of_density():
    line = dense_line(4, np.arange(16), np.full(16, 1 / 16))
    assert sobolev_norm_sq(line, 0.0) == pytest.approx(1.0, rel=1e-2)


def test_sobolev_rejects_bad_parameters():
    line = dense_line(4, np.arange(16), np.full(16, 1 / 16))
    with pytest.raises(ExponentError):
        sobolev_norm_sq(line, 0.5)
    with pytest.raises(ExponentError):
        sobolev_norm_sq(line, -0.6)
    with pytest.raises(MeasureError):
        sobolev_norm_sq(line, 0.1, cutoff=8.0)


def test_sobolev_of_short_interval():
    line = dense_line(5, np.arange(8, 16), np.full(8, 1 / 8))
    assert sobolev_norm_sq(line, 0.0) == pytest.approx(4.0, rel=1e-2)
    assert sobolev_norm_sq(line, 0.25) > 0


@pytest.mark.slow
def test_marstrand_integral(uniform):
    result = marstrand_integral(uniform, 0.25, n_angles=16)
    assert result.rhs == pytest.approx(float(dyadic_energy(uniform, 1.5)))
    assert result.lhs > 0
    assert result.ratio == pytest.approx(result.lhs / result.rhs)
    with pytest.raises(MeasureError):
        marstrand_integral(uniform, 0.25, n_angles=8)


def test_adaptive_angle_mean_flat():
    mean, evals = adaptive_angle_mean(lambda a: 3.0, 16, 1e-4)
    assert mean == pytest.approx(3.0)
    assert evals == 16


def test_adaptive_angle_mean_resolves_a_spike():
    def spike(a):
        return 1001.0 if abs(a - 3 * pi / 4) < 1e-3 else 1.0

    # the plain 16-angle grid hits the spike and weights it 1/16
    mean, evals = adaptive_angle_mean(spike, 16, 2.0**-12)
    assert mean == pytest.approx(1 + 2.0 / (2 * pi), rel=0.15)
    assert 16 < evals <= 8 * 16


@pytest.mark.slow
@pytest.mark.parametrize("gamma", [0.05, 0.2])
def test_marstrand_ratio_is_stable_under_depth_doubling(gamma):
    shallow = marstrand_integral(branching_measure([0, 3], 3), gamma)
    deep = marstrand_integral(branching_measure([0, 3], 6), gamma)
    # the diagonal is seen end-on at 3pi/4 and 7pi/4, both on the base grid
    assert deep.evaluations > deep.n_angles
    assert 0.5 < deep.ratio / shallow.ratio < 2.0


def test_angle_sweep_rows(uniform):
    rows = angle_sweep(discretize(uniform, 3), 0.0, 4, subdiv=1)
    assert [r.angle for r in rows] == pytest.approx([0.0, pi / 2, pi, 3 * pi / 2])
    assert rows[0].l2 == pytest.approx(1.0)


def test_exact_axis_slices(uniform_exact):
    grid = discretize(uniform_exact, 3)
    assert slice_measure(grid, Direction.of(0.0), (0.3, 0.5)) == Fraction(1)
    assert slice_measure(grid, Direction.of(pi / 2), (0.7, 0.1)) == Fraction(1)


def test_rational_slices_stay_on_the_axes(uniform_exact):
    grid = discretize(uniform_exact, 3)
    with pytest.raises(MeasureError, match="axes"):
        slice_measure(grid, Direction.of(pi / 4), (0.5, 0.5))


def test_raycast_slices(uniform, three_branch):
    grid = discretize(uniform, 4)
    assert slice_measure(grid, Direction.of(pi / 4), (0.5, 0.5)) == pytest.approx(sqrt(2))
    assert slice_measure(grid, Direction.of(0.0), (0.5, 0.3)) == pytest.approx(1.0)
    assert disintegrated_total(discretize(three_branch, 4), Direction.of(0.3)) == pytest.approx(1.0, rel=1e-2)


def test_line_support_length():
    line = dense_line(3, np.array([2, 5]), np.array([0.5, 0.5]))
    assert line_support_length(line) == pytest.approx(0.5)
