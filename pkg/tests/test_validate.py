from fractions import Fraction

import numpy as np
import pytest

from fractalmeter.engine.model import LevelSlice, MeasureTree, Mode
from fractalmeter.engine.parse import MeasureDocument
from fractalmeter.engine.validate import ValidationError, validate_document, validate_tree


def _doc(rows, dim=1, depth=2, mode=Mode.FLOAT):
    return MeasureDocument(path="m.json", dim=dim, depth=depth, mode=mode, rows=tuple(rows))


def _codes(result):
    return [i.code for i in result.issues]


def test_clean_document():
    result = validate_document(_doc([(2, (0,), 0.5), (2, (3,), 0.5)]))
    assert result.ok
    result.raise_for_issues()


def test_document_rules():
    result = validate_document(
        _doc(
            [
                (1, (0,), 0.25),
                (2, (4,), 0.25),
                (2, (1,), -0.1),
                (2, (1,), 0.5),
                (2, (2,), float("nan")),
            ]
        )
    )
    assert set(_codes(result)) == {"leaf_level", "coord_range", "negative_mass", "duplicate", "non_finite"}
    with pytest.raises(ValidationError, match=r"m.json: \[leaf_level\]"):
        result.raise_for_issues()


def test_header_rules_stop_early():
    assert _codes(validate_document(_doc([], dim=3))) == ["dim"]
    assert _codes(validate_document(_doc([], dim=2, depth=31))) == ["depth"]


def test_zero_mass_document():
    assert _codes(validate_document(_doc([(2, (0,), 0.0)]))) == ["zero_mass"]
    exact = _doc([(2, (0,), Fraction(0))], mode=Mode.RATIONAL)
    assert _codes(validate_document(exact)) == ["zero_mass"]


def test_issue_cap_per_code():
    rows = [(1, (i,), 0.1) for i in range(4)] * 3
    result = validate_document(_doc(rows, depth=3))
    assert _codes(result).count("leaf_level") == 5
    assert _codes(result).count("duplicate") == 5


def _level(keys, masses, exact=False):
    m = np.empty(len(masses), dtype=object) if exact else np.asarray(masses, dtype=np.float64)
    if exact:
        m[:] = masses
    return LevelSlice(keys=np.asarray(keys, dtype=np.int64), masses=m)


def test_built_trees_are_valid(uniform, uniform_exact):
    assert validate_tree(uniform).ok
    assert validate_tree(uniform_exact).ok


def test_inconsistent_tree():
    tree = MeasureTree(
        dim=1,
        depth=1,
        mode=Mode.RATIONAL,
        levels=(
            _level([0], [Fraction(1)], exact=True),
            _level([0, 1], [Fraction(1, 2), Fraction(1, 3)], exact=True),
        ),
    )
    assert _codes(validate_tree(tree)) == ["consistency"]


def test_float_consistency_tolerance():
    ok = MeasureTree(
        dim=1,
        depth=1,
        mode=Mode.FLOAT,
        levels=(_level([0], [1.0]), _level([0, 1], [0.5, 0.5 + 2.0**-50])),
    )
    assert validate_tree(ok).ok
    off = MeasureTree(
        dim=1,
        depth=1,
        mode=Mode.FLOAT,
        levels=(_level([0], [1.0]), _level([0, 1], [0.5, 0.5001])),
    )
    assert _codes(validate_tree(off)) == ["consistency"]


def test_structural_tree_rules():
    bad = MeasureTree(
        dim=1,
        depth=1,
        mode=Mode.RATIONAL,
        levels=(_level([0], [1.0]), _level([1, 0, 2], [0.5, 0.0, 0.5])),
    )
    assert set(_codes(validate_tree(bad))) == {"key_range", "key_order", "mode", "nonpositive_mass"}


def test_support_mismatch():
    tree = MeasureTree(
        dim=1,
        depth=1,
        mode=Mode.FLOAT,
        levels=(_level([0], [1.0]), _level([0], [1.0])),
    )
    assert validate_tree(tree).ok
    orphan = MeasureTree(
        dim=2,
        depth=1,
        mode=Mode.FLOAT,
        levels=(_level([], []), _level([3], [1.0])),
    )
    assert _codes(validate_tree(orphan)) == ["support"]
