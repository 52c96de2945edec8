from fractions import Fraction

import hypothesis.strategies as st
import numpy as np
from hypothesis import given

from fractalmeter.engine import sparse


@given(st.lists(st.tuples(st.integers(0, 255), st.integers(0, 255)), min_size=1, max_size=50))
def test_encode_decode_inverse(cells):
    coords = np.array(cells, dtype=np.int64)
    keys = sparse.encode(coords, 2, 8)
    assert np.array_equal(sparse.decode(keys, 2, 8), coords)
    for (x, y), k in zip(cells, keys):
        assert sparse.encode_one((x, y), 8) == int(k)
        assert sparse.decode_one(int(k), 2, 8) == (x, y)


def test_child_index_is_x_bit_plus_twice_y_bit():
    coords = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert sparse.encode(coords, 2, 1).tolist() == [0, 1, 2, 3]


def test_parent_key_drops_dim_bits():
    key = sparse.encode_one((5, 3), 3)
    assert key >> 2 == sparse.encode_one((2, 1), 2)
    assert sparse.ancestor_keys(np.array([key]), 2, 2)[0] == sparse.encode_one((1, 0), 1)


def test_prefix_range_finds_descendants():
    keys = np.arange(16, dtype=np.int64)
    assert sparse.prefix_range(keys, 2, 2, 1) == (8, 12)
    assert sparse.prefix_range(keys, 0, 2, 2) == (0, 16)


def test_group_sum_keeps_fractions_exact():
    keys = np.array([3, 1, 3, 1, 2])
    values = np.empty(5, dtype=object)
    values[:] = [Fraction(1, 3), Fraction(1, 6), Fraction(1, 6), Fraction(1, 6), Fraction(1, 6)]
    uniq, sums = sparse.group_sum(keys, values)
    assert uniq.tolist() == [1, 2, 3]
    assert list(sums) == [Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)]
    assert sparse.exact_sum(sums) == 1


def test_group_sum_float():
    uniq, sums = sparse.group_sum(np.array([0, 0, 5]), np.array([0.25, 0.25, 0.5]))
    assert uniq.tolist() == [0, 5]
    assert sums.tolist() == [0.5, 0.5]


def test_group_sum_empty():
    uniq, sums = sparse.group_sum(np.array([], dtype=np.int64), np.array([], dtype=np.float64))
    assert len(uniq) == 0 and len(sums) == 0


def test_bit_lengths_are_exact_past_float_precision():
    values = [0, 1, 2, 3, 255, 256, 2**53 - 1, 2**54 - 1, 2**62 + 5]
    assert sparse.bit_lengths(np.array(values, dtype=np.int64)).tolist() == [v.bit_length() for v in values]


@given(st.integers(0, 2**62))
def test_bit_lengths_match_python(v):
    assert int(sparse.bit_lengths(np.array([v], dtype=np.int64))[0]) == v.bit_length()
