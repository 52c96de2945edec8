# src/fractalmeter/engine/energy.py

"""
Dyadic and Euclidean s-energies.

This module contains:
- correlation sums and profiles (per-level sums of squared masses),
- the dyadic energy in closed form and its brute-force pair oracle,
- the block decomposition of the correlation series along a schedule,
- the Riesz energy of the atomized discretization,
- L2 norms of grid and line measures.

In rational mode every sum is exact; powers 2**(s*j) are sympy values,
so results compare with model.scalars_equal.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import cos, pi, sin
from typing import TYPE_CHECKING, Union

import numpy as np
import sympy
from scipy import integrate

from . import sparse
from .kernels import riesz_pair_sum
from .measure import renormalize_to_unit
from .model import (
    ExponentError,
    Grid1D,
    GridMeasure,
    MeasureTree,
    Mode,
    ScheduleError,
    Scalar,
    exact_exponent,
    to_exact,
)

if TYPE_CHECKING:
    from .schedule import ScaleSchedule


# ---------------------------------------------------------------------
# Exponents and powers of two
# ---------------------------------------------------------------------

def check_exponent(s: float, dim: int) -> None:
    if not 0.0 < s < dim:
        raise ExponentError(f"exponent s={s} must lie in (0, {dim})")


class _Powers:
    """2**(s*j) in one numeric mode, with exact accumulation helpers."""

    def __init__(self, s: float, mode: Mode) -> None:
        self.mode = mode
        self.s = s
        if mode is Mode.RATIONAL:
            self.base = sympy.Integer(2) ** exact_exponent(s)
        else:
            self.base = 2.0**s

    def __call__(self, j: int) -> Scalar:
        return self.base**j

    def combine(self, coeffs: dict[int, Fraction | float]) -> Scalar:
        """sum(coeff * base**j) with coefficients kept exact until the end."""
        if self.mode is Mode.RATIONAL:
            return sympy.Add(*[to_exact(c) * self.base**j for j, c in sorted(coeffs.items()) if c != 0])
        return float(sum(float(c) * self.base**j for j, c in sorted(coeffs.items())))

    def scalar(self, x) -> Scalar:
        return to_exact(x) if self.mode is Mode.RATIONAL else float(x)


# ---------------------------------------------------------------------
# Correlation sums
# ---------------------------------------------------------------------

def _square_sum(masses: np.ndarray):
    if sparse.is_exact(masses):
        acc = Fraction(0)
        for v in masses:
            acc += v * v
        return acc
    return float(np.dot(masses, masses))


def correlation_sums(tree: MeasureTree) -> list:
    """S_j = sum over level-j cubes of mass**2, for j = 0..depth (exact in rational mode)."""
    return [_square_sum(lv.masses) for lv in tree.levels]


@dataclass(frozen=True, slots=True)
class CorrelationProfile:
    """
    Correlation terms T_j = 2**(s*j) * S_j for j = 1..depth.

    `sums` keeps S_0..S_depth so energies can be formed without
    revisiting the tree.
    """

    s: float
    dim: int
    mode: Mode
    sums: tuple
    terms: tuple

    @property
    def depth(self) -> int:
        return len(self.terms)

    def rows(self) -> list[tuple[int, float]]:
        return [(j, float(t)) for j, t in enumerate(self.terms, start=1)]


def correlation_profile(tree: MeasureTree, s: float) -> CorrelationProfile:
    check_exponent(s, tree.dim)
    sums = correlation_sums(tree)
    pw = _Powers(s, tree.mode)
    terms = tuple(pw(j) * pw.scalar(sums[j]) for j in range(1, tree.depth + 1))
    return CorrelationProfile(s=s, dim=tree.dim, mode=tree.mode, sums=tuple(sums), terms=terms)


# ---------------------------------------------------------------------
# Dyadic energy
# ---------------------------------------------------------------------

def dyadic_energy(tree: MeasureTree, s: float) -> Scalar:
    """
    Dyadic s-energy of the discretization at the tree's depth.

    E = S_0 + (1 - 2**-s) * (sum_{j=1..M} T_j + T_M * r / (1 - r)),
    r = 2**(s - d). The tail is the exact contribution of levels below M,
    where correlation sums of the discretization shrink by 2**-d per level.
    """
    check_exponent(s, tree.dim)
    sums = correlation_sums(tree)
    pw = _Powers(s, tree.mode)
    d = tree.dim
    m = tree.depth

    coeffs: dict[int, Fraction | float] = {j: sums[j] for j in range(1, m + 1)}
    series = pw.combine(coeffs)
    tail_ratio = _tail_ratio(pw, d)
    tail = pw(m) * pw.scalar(sums[m]) * tail_ratio
    return pw.scalar(sums[0]) + (1 - 1 / pw.base) * (series + tail)


def _tail_ratio(pw: _Powers, d: int) -> Scalar:
    r = pw.base / 2**d
    return r / (1 - r)


def pairwise_dyadic_energy(tree: MeasureTree, s: float) -> Scalar:
    """
    Brute-force double sum of 2**(s*|x ^ y|) over leaf pairs of the
    discretization at depth M.

    Distinct leaves contribute at the level of their deepest common
    ancestor; a leaf against itself contributes the expectation over two
    independent uniform points in it. Intended as an oracle for small trees.
    """
    check_exponent(s, tree.dim)
    pw = _Powers(s, tree.mode)
    d = tree.dim
    m = tree.depth
    keys = tree.leaves.keys
    masses = tree.leaves.masses

    xor = keys[:, None] ^ keys[None, :]
    bits = sparse.bit_lengths(xor)
    common = m - (bits + d - 1) // d

    coeffs: dict[int, Fraction | float] = {}
    n = len(keys)
    if sparse.is_exact(masses):
        for a in range(n):
            for b in range(a + 1, n):
                lvl = int(common[a, b])
                coeffs[lvl] = coeffs.get(lvl, Fraction(0)) + 2 * masses[a] * masses[b]
    else:
        weights = np.outer(masses, masses)
        iu = np.triu_indices(n, k=1)
        lv = common[iu]
        w = 2.0 * weights[iu]
        for lvl in np.unique(lv):
            coeffs[int(lvl)] = float(w[lv == lvl].sum())

    self_sq = _square_sum(masses)
    diagonal = pw(m) * pw.scalar(self_sq) * (1 + (1 - 1 / pw.base) * _tail_ratio(pw, d))
    return pw.combine(coeffs) + diagonal


def local_energies(tree: MeasureTree, level: int, span: int, s: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Dyadic s-energies of every renormalized measure mu^Q seen at
    resolution 2**-span, Q over the positive-mass cubes of `level` (float).

    Returns (cube keys, energies), keys in the order of tree.level(level).
    """
    check_exponent(s, tree.dim)
    if level + span > tree.depth:
        raise ScheduleError(f"level {level} + span {span} exceeds depth {tree.depth}")
    base = tree.level(level)
    mq = np.asarray(base.masses, dtype=np.float64)

    sums = [np.ones(len(base))]
    for i in range(1, span + 1):
        lv = tree.level(level + i)
        m = np.asarray(lv.masses, dtype=np.float64)
        owners = sparse.ancestor_keys(lv.keys, tree.dim, i)
        _, sq = sparse.group_sum(owners, m * m)
        sums.append(sq / (mq * mq))

    u = 2.0**s
    r = u / 2**tree.dim
    series = sum(u**i * sums[i] for i in range(1, span + 1)) if span else np.zeros(len(base))
    tail = u**span * sums[span] * r / (1 - r)
    return base.keys.copy(), sums[0] + (1 - 1 / u) * (series + tail)


# ---------------------------------------------------------------------
# Block decomposition
# ---------------------------------------------------------------------

def block_decomposition(tree: MeasureTree, s: float, schedule: "ScaleSchedule") -> list[Scalar]:
    """
    Block terms B_j = 2**(s*m_j) * sum_{Q in D_{m_j}} mu(Q)**2 * C(mu^Q, d_j),
    where C(nu, n) = sum_{i=1..n} 2**(s*i) * S_i(nu).

    Each block is assembled cube by cube from the renormalized measures;
    B_j equals the sum of T_k for m_j < k <= m_{j+1}.
    """
    check_exponent(s, tree.dim)
    values = schedule.values
    if values[-1] > tree.depth:
        raise ScheduleError(f"schedule reaches level {values[-1]} beyond depth {tree.depth}")

    pw = _Powers(s, tree.mode)
    blocks: list[Scalar] = []
    for j in range(len(values) - 1):
        mj, gap = values[j], values[j + 1] - values[j]
        coeffs: dict[int, Fraction | float] = {}
        if gap > 0:
            for q in tree.cubes(mj):
                mq = tree.mass(q)
                local = renormalize_to_unit(tree, q, span=gap)
                local_sums = correlation_sums(local)
                for i in range(1, gap + 1):
                    coeffs[mj + i] = coeffs.get(mj + i, 0) + mq * mq * local_sums[i]
        blocks.append(pw.combine(coeffs) if coeffs else pw.scalar(0))
    return blocks


# ---------------------------------------------------------------------
# Euclidean energy
# ---------------------------------------------------------------------

@lru_cache(maxsize=64)
def riesz_self_constant(s: float, dim: int) -> float:
    """
    c(s, d) = double integral of |x - y|**-s over the unit cube squared,
    so a uniform cell of side h and mass m has self-energy c * m**2 * h**-s.
    """
    check_exponent(s, dim)
    if dim == 1:
        return 2.0 / ((1.0 - s) * (2.0 - s))

    def integrand(phi: float) -> float:
        c, sn = cos(phi), sin(phi)
        r = 1.0 / c
        return (
            r ** (2 - s) / (2 - s)
            - (c + sn) * r ** (3 - s) / (3 - s)
            + c * sn * r ** (4 - s) / (4 - s)
        )

    value, _ = integrate.quad(integrand, 0.0, pi / 4)
    return 8.0 * value


@dataclass(frozen=True, slots=True)
class EuclideanEnergy:
    total: float
    pairs: float
    diagonal: float
    subdiv: int


def atomize(tree: MeasureTree, subdiv: int = 0) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Atoms of the discretization at depth M: each leaf split into
    2**(dim*subdiv) equal sub-atoms at sub-cell centers.

    Returns (points, masses, sub-cell side).
    """
    if subdiv < 0:
        raise ValueError("subdiv must be >= 0")
    level = tree.depth + subdiv
    coords = sparse.decode(tree.leaves.keys, tree.dim, tree.depth)
    masses = np.asarray(tree.leaves.masses, dtype=np.float64)

    k = 1 << subdiv
    offsets = np.stack(np.meshgrid(*([np.arange(k)] * tree.dim), indexing="ij"), axis=-1).reshape(-1, tree.dim)
    sub = (coords[:, None, :] * k + offsets[None, :, :]).reshape(-1, tree.dim)
    side = 2.0**-level
    points = (sub + 0.5) * side
    return points, np.repeat(masses / len(offsets), len(offsets)), side


def euclidean_energy(tree: MeasureTree, s: float, subdiv: int = 1) -> EuclideanEnergy:
    """
    Riesz s-energy of the atomized discretization.

    Off-diagonal pairs use the point kernel; each atom against itself is
    replaced by the self-energy of its uniform sub-cell, c(s, d) * m**2 * h**-s.
    """
    check_exponent(s, tree.dim)
    points, masses, side = atomize(tree, subdiv)
    pairs = float(riesz_pair_sum(points, masses, float(s)))
    diagonal = riesz_self_constant(float(s), tree.dim) * float(np.dot(masses, masses)) * side ** (-s)
    return EuclideanEnergy(total=pairs + diagonal, pairs=pairs, diagonal=diagonal, subdiv=subdiv)


# ---------------------------------------------------------------------
# L2 norms
# ---------------------------------------------------------------------

def l2_norm_sq(grid: Union[GridMeasure, Grid1D], *, normalized: bool = False) -> Scalar:
    """
    Squared L2 norm of the cellwise-constant density: 2**(d*m) * sum(mass**2).

    With normalized=True the grid is first scaled to total mass 1.
    """
    if isinstance(grid, GridMeasure):
        factor = 1 << (grid.dim * grid.level)
    else:
        factor = 1 << grid.level
    value = _square_sum(grid.masses) * factor
    if normalized:
        total = grid.total
        value = value / (total * total)
    return value
