# src/fractalmeter/engine/entropy.py

"""
Shannon entropy over dyadic partitions (log base 2).

This module contains:
- entropy of a mass vector (0 log 0 = 0),
- partition, conditional and normalized entropies of grids and trees,
- the entropy lower bound obtained from an L2 norm,
- the half-cell shifted partition and conditional entropy on the line.

Entropies are float64 in every numeric mode.
"""

from dataclasses import dataclass
from math import isclose, log, log2
from typing import Union

import numpy as np
from scipy.special import entr

from . import sparse
from .energy import l2_norm_sq
from .model import Grid1D, GridMeasure, MeasureError, MeasureTree, OutOfResolutionError


_LN2 = log(2.0)

# Total-mass tolerance for "probability" preconditions on float grids.
_TOTAL_ATOL = 1e-9


@dataclass(frozen=True, slots=True)
class EntropyValue:
    """
    Entropy in bits of the partition at `fine_level`, conditioned on the
    partition at `coarse_level` when one is given.
    """

    bits: float
    fine_level: int
    coarse_level: int | None = None

    def __float__(self) -> float:
        return self.bits


# ---------------------------------------------------------------------
# Mass vectors
# ---------------------------------------------------------------------

def entropy_of_masses(masses) -> float:
    """-sum p log2 p over the given masses (zeros skipped)."""
    p = np.asarray(masses, dtype=np.float64)
    return float(entr(p[p > 0]).sum() / _LN2)


def _require_probability(total, what: str) -> None:
    if not isclose(float(total), 1.0, rel_tol=0.0, abs_tol=_TOTAL_ATOL):
        raise MeasureError(f"{what} must have total mass 1 (got {float(total)!r})")


def _conditional_bits(fine_keys: np.ndarray, fine_masses: np.ndarray, shift: int) -> float:
    """
    sum_G mu(G) * H(mu_G, fine), with G the ancestor of each fine cell
    obtained by dropping `shift` low key bits.
    """
    m = np.asarray(fine_masses, dtype=np.float64)
    keys = np.asarray(fine_keys, dtype=np.int64)
    parents = keys >> shift
    uniq, parent_mass = sparse.group_sum(parents, m)
    g = parent_mass[np.searchsorted(uniq, parents)]
    keep = m > 0
    return float(-(m[keep] * np.log2(m[keep] / g[keep])).sum())


# ---------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------

def partition_entropy(grid: Union[GridMeasure, Grid1D]) -> EntropyValue:
    _require_probability(grid.total, "grid")
    return EntropyValue(bits=entropy_of_masses(grid.masses), fine_level=grid.level)


def conditional_entropy(tree: MeasureTree, fine: int, coarse: int) -> EntropyValue:
    """
    H(mu, D_fine | D_coarse) = sum_G mu(G) * H(mu_G, D_fine) over
    positive-mass G in D_coarse.
    """
    if coarse > fine:
        raise MeasureError(f"coarse level {coarse} exceeds fine level {fine}")
    lv = tree.level(fine)
    tree.level(coarse)
    bits = _conditional_bits(lv.keys, lv.masses, tree.dim * (fine - coarse))
    return EntropyValue(bits=bits, fine_level=fine, coarse_level=coarse)


def interval_conditional_entropy(line: Grid1D, fine: int, coarse: int) -> EntropyValue:
    """H(nu, D_fine | D_coarse) for a measure binned on the line."""
    if coarse > fine:
        raise MeasureError(f"coarse level {coarse} exceeds fine level {fine}")
    if fine > line.level:
        raise OutOfResolutionError(f"line is binned at level {line.level}, not {fine}")
    g = line.coarsen(fine) if fine < line.level else line
    idx = g.lo + np.arange(len(g.masses), dtype=np.int64)
    # floor division on negative indices is an arithmetic shift
    bits = _conditional_bits(idx, g.masses, fine - coarse)
    return EntropyValue(bits=bits, fine_level=fine, coarse_level=coarse)


def normalized_entropy(grid: Union[GridMeasure, Grid1D]) -> float:
    """H(mu, D_m) / m."""
    if grid.level < 1:
        raise MeasureError("normalized entropy needs level >= 1")
    return partition_entropy(grid).bits / grid.level


def entropy_lower_bound_from_l2(grid: Union[GridMeasure, Grid1D]) -> float:
    """
    d - log2(||grid||_2**2) / m: a lower bound for the normalized entropy
    by concavity of the logarithm.
    """
    _require_probability(grid.total, "grid")
    if grid.level < 1:
        raise MeasureError("the L2 bound needs level >= 1")
    dim = grid.dim if isinstance(grid, GridMeasure) else 1
    return dim - log2(float(l2_norm_sq(grid))) / grid.level


def shifted_partition_entropy(tree: MeasureTree, m: int) -> EntropyValue:
    """
    Entropy of the partition D_m translated by 2**-(m+1) along every axis.

    A level-(m+1) cell with coordinate c falls in the shifted cell with
    index (c + 1) // 2, so the tree must resolve level m + 1.
    """
    lv = tree.level(m + 1)
    coords = sparse.decode(lv.keys, tree.dim, m + 1)
    shifted = (coords + 1) // 2
    # shifted indices reach 2**m, so index them on a grid one level finer
    keys = sparse.encode(shifted, tree.dim, m + 1)
    _, masses = sparse.group_sum(keys, np.asarray(lv.masses, dtype=np.float64))
    return EntropyValue(bits=entropy_of_masses(masses), fine_level=m)
