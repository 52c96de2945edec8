# src/fractalmeter/engine/sparse.py

"""
Sparse dyadic addressing.

This module provides:
- Morton (bit-interleaved) keys for dyadic cells in dimension 1 or 2,
- grouped sums over integer keys for float64 and exact (object) arrays.

Keys are int64. A level-m cell in dimension d uses d*m bits, so the
deepest supported level is MAX_LEVEL[d].

No measure semantics live here.
"""

from fractions import Fraction
from typing import Final

import numpy as np


MAX_LEVEL: Final[dict[int, int]] = {1: 62, 2: 30}


# ---------------------------------------------------------------------
# Morton keys
# ---------------------------------------------------------------------

def encode(coords: np.ndarray, dim: int, level: int) -> np.ndarray:
    """
    Interleave integer cell coordinates into Morton keys.

    `coords` has shape (n, dim). For dim == 2 bit b of x lands at 2b and
    bit b of y at 2b + 1, so the two lowest key bits are the child index
    (x_bit + 2 * y_bit) of a cell inside its parent.
    """
    c = np.asarray(coords, dtype=np.int64).reshape(-1, dim)
    if dim == 1:
        return c[:, 0].copy()

    x = c[:, 0]
    y = c[:, 1]
    keys = np.zeros(len(c), dtype=np.int64)
    for b in range(level):
        keys |= ((x >> b) & 1) << (2 * b)
        keys |= ((y >> b) & 1) << (2 * b + 1)
    return keys


def decode(keys: np.ndarray, dim: int, level: int) -> np.ndarray:
    """Inverse of `encode`: return coordinates of shape (n, dim)."""
    k = np.asarray(keys, dtype=np.int64)
    if dim == 1:
        return k.reshape(-1, 1).copy()

    x = np.zeros(len(k), dtype=np.int64)
    y = np.zeros(len(k), dtype=np.int64)
    for b in range(level):
        x |= ((k >> (2 * b)) & 1) << b
        y |= ((k >> (2 * b + 1)) & 1) << b
    return np.stack([x, y], axis=1)


def encode_one(coords: tuple[int, ...], level: int) -> int:
    """Scalar `encode` for a single cell."""
    if len(coords) == 1:
        return int(coords[0])
    x, y = coords
    key = 0
    for b in range(level):
        key |= ((x >> b) & 1) << (2 * b)
        key |= ((y >> b) & 1) << (2 * b + 1)
    return key


def decode_one(key: int, dim: int, level: int) -> tuple[int, ...]:
    """Scalar `decode` for a single key."""
    if dim == 1:
        return (int(key),)
    x = y = 0
    for b in range(level):
        x |= ((key >> (2 * b)) & 1) << b
        y |= ((key >> (2 * b + 1)) & 1) << b
    return (x, y)


def ancestor_keys(keys: np.ndarray, dim: int, levels_up: int) -> np.ndarray:
    """Keys of the ancestors `levels_up` levels above."""
    return np.asarray(keys, dtype=np.int64) >> (dim * levels_up)


def prefix_range(keys: np.ndarray, prefix: int, dim: int, levels_down: int) -> tuple[int, int]:
    """
    Return [lo, hi) positions in sorted `keys` of all descendants of `prefix`
    located `levels_down` levels below it.
    """
    shift = dim * levels_down
    lo = int(np.searchsorted(keys, prefix << shift, side="left"))
    hi = int(np.searchsorted(keys, (prefix + 1) << shift, side="left"))
    return lo, hi


def bit_lengths(values: np.ndarray) -> np.ndarray:
    """Bit length of each non-negative int64, by integer shifts (no float rounding)."""
    v = np.array(values, dtype=np.int64)
    out = np.zeros(v.shape, dtype=np.int64)
    for shift in (32, 16, 8, 4, 2, 1):
        big = v >= (1 << shift)
        out[big] += shift
        v[big] >>= shift
    return out + (v > 0)


# ---------------------------------------------------------------------
# Grouped sums
# ---------------------------------------------------------------------

def is_exact(values: np.ndarray) -> bool:
    return values.dtype == object


def group_sum(keys: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Sum `values` over equal `keys`.

    Returns (unique sorted keys, sums). Exact object arrays are summed
    with Python arithmetic so Fractions stay Fractions; float arrays use
    numpy reductions.
    """
    k = np.asarray(keys, dtype=np.int64)
    if len(k) == 0:
        return k.copy(), values[:0].copy()

    if np.all(k[1:] >= k[:-1]):
        ks, vs = k, values
    else:
        order = np.argsort(k, kind="stable")
        ks = k[order]
        vs = values[order]

    starts = np.flatnonzero(np.concatenate(([True], ks[1:] != ks[:-1])))
    uniq = ks[starts]

    if not is_exact(vs):
        return uniq, np.add.reduceat(vs, starts)

    bounds = list(starts) + [len(ks)]
    sums = np.empty(len(uniq), dtype=object)
    for i in range(len(uniq)):
        acc = vs[bounds[i]]
        for v in vs[bounds[i] + 1 : bounds[i + 1]]:
            acc = acc + v
        sums[i] = acc
    return uniq, sums


def exact_sum(values: np.ndarray):
    """Sum of an array, exact for object arrays (returns 0 for empty input)."""
    if is_exact(values):
        acc = Fraction(0)
        for v in values:
            acc = acc + v
        return acc
    return float(np.sum(values))
