from fractions import Fraction
from math import log2

import numpy as np
import pytest

from fractalmeter.engine.generators import (
    GeneratorSpec,
    beta_model_measure,
    branching_measure,
    circle_measure,
    digit_restricted_measure,
    even_square_blocked,
    expected_dimension,
    free_levels,
    generate,
    line_measure,
    product_measure,
)
from fractalmeter.engine.measure import from_coords
from fractalmeter.engine.model import GeneratorError, Mode
from fractalmeter.engine.ops import tree_digest
from fractalmeter.engine.validate import validate_tree


def test_branching_counts(three_branch):
    assert [len(lv) for lv in three_branch.levels] == [3**m for m in range(7)]
    assert three_branch.total == pytest.approx(1.0)
    with pytest.raises(GeneratorError):
        branching_measure([], 3)
    with pytest.raises(GeneratorError):
        branching_measure([0, 4], 3)


def test_blocked_levels():
    assert all(even_square_blocked(n) for n in [*range(4, 9), *range(16, 25)])
    assert not any(even_square_blocked(n) for n in [*range(1, 4), *range(9, 16)])
    assert free_levels(8) == [1, 2, 3]
    assert free_levels(5, [2, 3]) == [1, 4, 5]
    assert free_levels(3, "never") == [1, 2, 3]
    assert free_levels(3, "always") == []
    with pytest.raises(GeneratorError):
        free_levels(3, "primes")


def test_digit_restricted_support():
    line = digit_restricted_measure(8, dim=1, mode=Mode.RATIONAL)
    assert len(line.leaves) == 2**3
    assert all(v == Fraction(1, 8) for v in line.leaves.masses)
    with pytest.raises(GeneratorError):
        digit_restricted_measure(0)


def test_planar_digit_restriction_is_a_product():
    a = digit_restricted_measure(9, dim=1)
    planar = digit_restricted_measure(9, dim=2)
    assert tree_digest(planar) == tree_digest(product_measure(a, a))


def test_product_requires_matching_lines(uniform):
    a = digit_restricted_measure(4, dim=1)
    with pytest.raises(GeneratorError):
        product_measure(a, uniform)
    with pytest.raises(GeneratorError):
        product_measure(a, digit_restricted_measure(5, dim=1))


def test_beta_model_is_seeded():
    a = beta_model_measure(0.6, 6, seed=7)
    b = beta_model_measure(0.6, 6, seed=7)
    assert tree_digest(a) == tree_digest(b)
    assert a.total == pytest.approx(1.0)
    assert validate_tree(a).ok
    assert tree_digest(beta_model_measure(1.0, 3)) == tree_digest(branching_measure([0, 1, 2, 3], 3))
    with pytest.raises(GeneratorError):
        beta_model_measure(0.0, 3)


def test_canonical_digest_of_a_uniform_quadrant_split():
    tree = from_coords(2, 1, np.array([[1, 1], [0, 0], [0, 1], [1, 0]]), [Fraction(1, 4)] * 4, Mode.RATIONAL)
    assert tree_digest(tree) == "d83b046df98205b4b15cd1fea54d4aa54b86e553d0e04427c0a9e1664f8eb888"


def test_seeded_beta_model_is_pinned(baselines):
    tree = generate(GeneratorSpec(kind="beta-model", depth=8, p=0.7, seed=42))
    assert validate_tree(tree).ok
    baselines.check("beta-model-p0.7-seed42-depth8", tree_digest(tree))


def test_beta_model_exact():
    tree = beta_model_measure(0.5, 4, seed=3, mode=Mode.RATIONAL)
    assert tree.total == 1
    assert validate_tree(tree).ok


def test_circle_measure(circle):
    assert circle.total == pytest.approx(1.0)
    centres = circle.centers()
    radii = ((centres - 0.5) ** 2).sum(axis=1) ** 0.5
    assert abs(radii - 0.3).max() <= 2.0**-8
    with pytest.raises(GeneratorError):
        circle_measure((0.5, 0.5), 0.6, 6)
    with pytest.raises(GeneratorError):
        circle_measure((0.5, 0.5), 0.0, 6)


def test_line_measure():
    seg = line_measure(4, y=0.3, start=0.25, stop=0.75, mode=Mode.RATIONAL)
    assert len(seg.leaves) == 8
    assert all(v == Fraction(1, 8) for v in seg.leaves.masses)
    partial = line_measure(2, start=0.1, stop=0.9)
    assert list(partial.leaves.masses) == pytest.approx([0.15 / 0.8, 0.25 / 0.8, 0.25 / 0.8, 0.15 / 0.8])
    with pytest.raises(GeneratorError):
        line_measure(4, y=1.0)
    with pytest.raises(GeneratorError):
        line_measure(4, start=0.5, stop=0.5)


def test_specs_generate_and_describe():
    spec = GeneratorSpec(kind="branching", depth=4, pattern=(0, 1, 3))
    assert tree_digest(generate(spec)) == tree_digest(branching_measure([0, 1, 3], 4))
    assert spec.to_dict()["pattern"] == [0, 1, 3]
    assert expected_dimension(spec) == pytest.approx(log2(3))

    line = GeneratorSpec(kind="digit-restricted", depth=6, dim=1)
    product = GeneratorSpec(kind="product", depth=6, factors=(line, line))
    assert expected_dimension(product) == pytest.approx(1.0)
    exact = product.in_mode(Mode.RATIONAL)
    assert all(f.mode is Mode.RATIONAL for f in exact.factors)
    assert generate(exact).total == 1

    assert expected_dimension(GeneratorSpec(kind="beta-model", depth=4, p=0.5)) == pytest.approx(1.0)
    assert expected_dimension(GeneratorSpec(kind="digit-restricted", depth=4, blocked=(2,), dim=1)) == pytest.approx(0.75)


def test_invalid_specs():
    with pytest.raises(GeneratorError):
        GeneratorSpec(kind="sierpinski", depth=3)
    with pytest.raises(GeneratorError):
        GeneratorSpec(kind="branching", depth=-1)
    with pytest.raises(GeneratorError):
        GeneratorSpec(kind="product", depth=3)
