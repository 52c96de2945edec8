# src/fractalmeter/engine/model.py

"""
Core domain models.

This module defines the in-memory representations of dyadic cubes,
sparse measure trees, single-level grid measures, directions and 1-D
binned measures, along with their core invariants.

All models are immutable after construction: arrays are frozen
(non-writeable) and dataclasses are frozen.

No file access and no heavy computation should happen here.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import cos, isclose, pi, sin, atan2, tau
from typing import Final, Union

import numpy as np
import sympy

from . import sparse


# ---------------------------------------------------------------------
# Numeric modes
# ---------------------------------------------------------------------

class Mode(str, Enum):
    """
    Scalar mode of a measure.

    RATIONAL keeps every mass a Fraction (no rounding anywhere in
    measure-core and energy sums). FLOAT stores float64 masses and
    honours the FLOAT_RTOL consistency contract.
    """

    FLOAT = "float"
    RATIONAL = "rational"


# Relative tolerance for children-sum-to-parent in float mode.
FLOAT_RTOL: Final[float] = 2.0**-40

# Slack for entropy inequalities (entropies are float64 in every mode).
ENTROPY_SLACK: Final[float] = 2.0**-30

Scalar = Union[Fraction, float, sympy.Expr]


# ---------------------------------------------------------------------
# Exceptions
# ---------------------------------------------------------------------

class MeasureError(ValueError):
    """Base class for domain errors raised by engine operations."""


class OutOfResolutionError(MeasureError):
    """A level beyond the stored depth was requested."""


class EmptyRestrictionError(MeasureError):
    """A restriction selected no positive mass."""


class ZeroMassError(MeasureError):
    """An operation needs positive mass (normalisation, renormalisation)."""


class ExponentError(MeasureError):
    """An energy or Sobolev exponent is outside its admissible range."""


class SeparationError(MeasureError):
    """A pin is too close to the support of a measure."""


class ScheduleError(MeasureError):
    """A scale schedule is malformed or does not fit the tree."""


class ShapeMismatchError(MeasureError):
    """Two trees that must share dimension, depth and support do not."""


class SupportError(MeasureError):
    """A point is required to lie in the support and does not."""


class GeneratorError(MeasureError):
    """Invalid generator parameters."""


# ---------------------------------------------------------------------
# Scalar helpers
# ---------------------------------------------------------------------

def to_float(x: Scalar) -> float:
    return float(x)


def to_exact(x: Scalar) -> sympy.Expr:
    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    return sympy.sympify(x)


def exact_exponent(s: float) -> sympy.Rational:
    """Exact rational exponent for a user-supplied float such as 0.5 or 1.5."""
    return sympy.Rational(str(s)).limit_denominator(10**6)


def pow2(exponent: float, j: int, mode: "Mode") -> Scalar:
    """2**(exponent * j), exact (sympy) in rational mode."""
    if mode is Mode.RATIONAL:
        return sympy.Integer(2) ** (exact_exponent(exponent) * j)
    return 2.0 ** (exponent * j)


def scalars_equal(a: Scalar, b: Scalar) -> bool:
    """
    Exact equality for rational-mode scalars.

    Fractions compare directly; anything involving irrational powers of 2
    is compared by simplifying the difference.
    """
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    diff = sympy.nsimplify(to_exact(a) - to_exact(b))
    if diff == 0:
        return True
    return sympy.simplify(sympy.radsimp(diff)) == 0


def mass_array(values, mode: Mode) -> np.ndarray:
    """Build a mass array in the representation of `mode`."""
    if mode is Mode.RATIONAL:
        out = np.empty(len(values), dtype=object)
        for i, v in enumerate(values):
            out[i] = v if isinstance(v, Fraction) else Fraction(v)
        return out
    return np.asarray(values, dtype=np.float64)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------
# CubeIndex
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class CubeIndex:
    """
    A half-open dyadic cube of side 2**-level in [0, 1)**dim.
    """

    dim: int
    level: int
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.level < 0 or self.level > sparse.MAX_LEVEL[self.dim]:
            raise ValueError(f"level out of range: {self.level}")
        if len(self.coords) != self.dim:
            raise ValueError("coords length must equal dim")
        n = 1 << self.level
        for c in self.coords:
            if not 0 <= c < n:
                raise ValueError(f"coordinate {c} out of range for level {self.level}")

    @classmethod
    def from_key(cls, dim: int, level: int, key: int) -> "CubeIndex":
        return cls(dim=dim, level=level, coords=sparse.decode_one(int(key), dim, level))

    @classmethod
    def containing(cls, point: tuple[float, ...], dim: int, level: int) -> "CubeIndex":
        n = 1 << level
        coords = []
        for v in point[:dim]:
            if not 0.0 <= v < 1.0:
                raise SupportError(f"point {point} is outside [0,1)^{dim}")
            coords.append(min(int(v * n), n - 1))
        return cls(dim=dim, level=level, coords=tuple(coords))

    @property
    def key(self) -> int:
        return sparse.encode_one(self.coords, self.level)

    @property
    def side(self) -> float:
        return 2.0**-self.level

    @property
    def corner(self) -> tuple[float, ...]:
        return tuple(c * self.side for c in self.coords)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple((c + 0.5) * self.side for c in self.coords)

    def parent(self) -> "CubeIndex":
        if self.level == 0:
            raise ValueError("root cube has no parent")
        return CubeIndex(self.dim, self.level - 1, tuple(c // 2 for c in self.coords))

    def children(self) -> tuple["CubeIndex", ...]:
        out = []
        for i in range(1 << self.dim):
            bits = tuple((i >> a) & 1 for a in range(self.dim))
            out.append(
                CubeIndex(self.dim, self.level + 1, tuple(2 * c + b for c, b in zip(self.coords, bits)))
            )
        return tuple(out)


# ---------------------------------------------------------------------
# Sparse levels
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LevelSlice:
    """
    Positive-mass cells of one level: sorted Morton keys and their masses.
    """

    keys: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        if len(self.keys) != len(self.masses):
            raise ValueError("keys and masses must have equal length")
        _freeze(self.keys)
        _freeze(self.masses)

    def __len__(self) -> int:
        return len(self.keys)

    def lookup(self, key: int) -> Scalar | None:
        i = int(np.searchsorted(self.keys, key))
        if i < len(self.keys) and int(self.keys[i]) == key:
            return self.masses[i]
        return None


# ---------------------------------------------------------------------
# MeasureTree
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True, eq=False)
class MeasureTree:
    """
    A finite-depth dyadic measure on [0, 1)**dim.

    Notes:
    - levels[m] holds the positive-mass cubes of D_m, m = 0..depth.
    - Absent cubes have mass 0.
    - Construct through measure.build_tree, which aggregates leaves and
      guarantees the children-sum-to-parent invariant.
    """

    dim: int
    depth: int
    mode: Mode
    levels: tuple[LevelSlice, ...]

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.depth < 0 or self.depth > sparse.MAX_LEVEL[self.dim]:
            raise ValueError(f"depth out of range: {self.depth}")
        if len(self.levels) != self.depth + 1:
            raise ValueError("levels must cover 0..depth")

    # -----------------------------------------------------------------
    # Queries
    # -----------------------------------------------------------------

    def level(self, m: int) -> LevelSlice:
        if m < 0 or m > self.depth:
            raise OutOfResolutionError(f"level {m} exceeds depth {self.depth}")
        return self.levels[m]

    @property
    def leaves(self) -> LevelSlice:
        return self.levels[self.depth]

    @property
    def total(self) -> Scalar:
        root = self.levels[0]
        return root.masses[0] if len(root) else self.zero

    @property
    def zero(self) -> Scalar:
        return Fraction(0) if self.mode is Mode.RATIONAL else 0.0

    @property
    def is_normalized(self) -> bool:
        if self.mode is Mode.RATIONAL:
            return self.total == 1
        return isclose(float(self.total), 1.0, rel_tol=FLOAT_RTOL)

    def mass(self, cube: CubeIndex) -> Scalar:
        if cube.dim != self.dim:
            raise ShapeMismatchError("cube dimension does not match tree")
        found = self.level(cube.level).lookup(cube.key)
        return self.zero if found is None else found

    def cubes(self, m: int) -> list[CubeIndex]:
        return [CubeIndex.from_key(self.dim, m, int(k)) for k in self.level(m).keys]

    def centers(self, m: int | None = None) -> np.ndarray:
        """Centers of the positive-mass cubes at level m (default: leaves)."""
        m = self.depth if m is None else m
        coords = sparse.decode(self.level(m).keys, self.dim, m)
        return (coords + 0.5) * 2.0**-m


# ---------------------------------------------------------------------
# GridMeasure
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True, eq=False)
class GridMeasure:
    """
    Masses of one dyadic level: the data of the discretization mu^(m).

    The represented measure has density 2**(dim*level) * mass(Q) on each
    cell Q.
    """

    dim: int
    level: int
    mode: Mode
    keys: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        if len(self.keys) != len(self.masses):
            raise ValueError("keys and masses must have equal length")
        _freeze(self.keys)
        _freeze(self.masses)

    @property
    def total(self) -> Scalar:
        return sparse.exact_sum(self.masses)

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.dim * self.level)

    def coords(self) -> np.ndarray:
        return sparse.decode(self.keys, self.dim, self.level)

    def centers(self) -> np.ndarray:
        return (self.coords() + 0.5) * 2.0**-self.level

    def float_masses(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=np.float64)

    def density(self) -> np.ndarray:
        """Dense density array, indexed [x, y] (dim 2) or [x] (dim 1)."""
        n = 1 << self.level
        shape = (n,) * self.dim
        dens = np.zeros(shape, dtype=np.float64)
        c = self.coords()
        dens[tuple(c[:, a] for a in range(self.dim))] = self.float_masses() / self.cell_volume
        return dens


# ---------------------------------------------------------------------
# Directions and 1-D measures
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Direction:
    """
    A unit vector theta = (cos angle, sin angle), angle in [0, 2*pi).
    """

    angle: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.angle < tau:
            raise ValueError("angle must lie in [0, 2*pi); use Direction.of()")

    @classmethod
    def of(cls, angle: float) -> "Direction":
        a = angle % tau
        return cls(0.0 if a >= tau else a)

    @classmethod
    def from_vector(cls, vx: float, vy: float) -> "Direction":
        if vx == 0.0 and vy == 0.0:
            raise ValueError("zero vector has no direction")
        return cls.of(atan2(vy, vx))

    @property
    def vector(self) -> tuple[float, float]:
        return cos(self.angle), sin(self.angle)

    def grid_index(self, n_angles: int) -> int:
        """Nearest index on the equispaced grid 2*pi*a/n_angles."""
        return int(round(self.angle * n_angles / tau)) % n_angles


def angle_grid(n_angles: int) -> np.ndarray:
    """Equispaced angles 2*pi*a/n, a = 0..n-1 (realises the circle measure)."""
    return 2.0 * pi * np.arange(n_angles) / n_angles


@dataclass(frozen=True, slots=True, eq=False)
class Grid1D:
    """
    A measure on the line binned into dyadic intervals of one level.

    masses[i] is the mass of [(lo + i) 2**-level, (lo + i + 1) 2**-level).
    """

    level: int
    lo: int
    masses: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self.masses)

    @property
    def total(self) -> Scalar:
        return sparse.exact_sum(self.masses)

    @property
    def width(self) -> float:
        return 2.0**-self.level

    def float_masses(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=np.float64)

    def centers(self) -> np.ndarray:
        return (self.lo + np.arange(len(self.masses)) + 0.5) * self.width

    def coarsen(self, level: int) -> "Grid1D":
        """Re-bin at a coarser level (floor division of interval indices)."""
        if level > self.level:
            raise OutOfResolutionError("cannot refine a binned measure")
        idx = np.floor_divide(self.lo + np.arange(len(self.masses)), 1 << (self.level - level))
        keys, sums = sparse.group_sum(idx, self.masses)
        return dense_line(level, keys, sums)


def dense_line(level: int, indices: np.ndarray, masses: np.ndarray) -> Grid1D:
    """Build a Grid1D from sparse (interval index, mass) pairs."""
    if len(indices) == 0:
        return Grid1D(level=level, lo=0, masses=masses[:0].copy())
    lo = int(indices.min())
    hi = int(indices.max())
    if sparse.is_exact(masses):
        out = np.empty(hi - lo + 1, dtype=object)
        out[:] = Fraction(0)
    else:
        out = np.zeros(hi - lo + 1, dtype=np.float64)
    out[np.asarray(indices, dtype=np.int64) - lo] = masses
    return Grid1D(level=level, lo=lo, masses=out)
