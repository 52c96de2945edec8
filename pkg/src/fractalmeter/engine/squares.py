# src/fractalmeter/engine/squares.py

"""
Heavy / good / bad classification of the dyadic squares of one level.

Given a measure mu and a reweighting mu~ of it (the restriction to some
subset, not renormalized), a positive-mass square Q of level m is

- heavy when mu(Q) > 2**-((s1 + 5 delta) m),
- good when mu~(Q) >= 2**(-4 delta m) mu(Q) > 0 and the local energy
  E_{s1}(mu^{Q,(d)}) <= 2**(6 delta m), d the schedule gap at m,
- bad otherwise.

This module does NOT choose the reweighting; see experiment.py.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .energy import local_energies
from .model import (
    CubeIndex,
    MeasureTree,
    Mode,
    Scalar,
    ScheduleError,
    ShapeMismatchError,
    pow2,
    to_exact,
)
from .pinned import local_projection_entropy


@dataclass(frozen=True, slots=True)
class SquareLabel:
    cube: CubeIndex
    heavy: bool
    good: bool
    mass: Scalar
    weighted_mass: Scalar
    local_energy: float

    @property
    def bad(self) -> bool:
        return not self.good


@dataclass(frozen=True, slots=True)
class SquareClassification:
    """
    Labels of every positive-mass square of `level`, with the mass
    accounting against the light and bad bounds.
    """

    level: int
    span: int
    s1: float
    delta: float
    mode: Mode
    labels: tuple[SquareLabel, ...]

    @property
    def heavy_threshold(self) -> float:
        return 2.0 ** (-(self.s1 + 5 * self.delta) * self.level)

    @property
    def heavy_count(self) -> int:
        return sum(1 for q in self.labels if q.heavy)

    @property
    def good_count(self) -> int:
        return sum(1 for q in self.labels if q.good)

    @property
    def good_mass(self) -> Scalar:
        return _total(q.weighted_mass for q in self.labels if q.good)

    @property
    def bad_mass(self) -> Scalar:
        return _total(q.weighted_mass for q in self.labels if q.bad)

    @property
    def bad_mass_bound(self) -> float:
        return 2.0 ** (-self.delta * self.level / 2)

    @property
    def light_mass(self) -> Scalar:
        return _total(q.mass for q in self.labels if not q.heavy)

    @property
    def light_bound(self) -> float:
        return len(self.labels) * self.heavy_threshold

    @property
    def light_bound_holds(self) -> bool:
        """light_mass <= (charged squares) * threshold; exact in rational mode."""
        if self.mode is Mode.RATIONAL:
            bound = len(self.labels) * pow2(-(self.s1 + 5 * self.delta), self.level, Mode.RATIONAL)
            return bool(to_exact(self.light_mass) <= bound)
        return float(self.light_mass) <= self.light_bound


def _total(values) -> Scalar:
    out: Scalar = 0
    for v in values:
        out = out + v
    return Fraction(out) if isinstance(out, int) else out


def _require_reweighting(mu: MeasureTree, weighted: MeasureTree) -> None:
    if (mu.dim, mu.depth, mu.mode) != (weighted.dim, weighted.depth, weighted.mode):
        raise ShapeMismatchError("weighted tree must share dim, depth and mode with mu")
    if not np.isin(weighted.leaves.keys, mu.leaves.keys).all():
        raise ShapeMismatchError("weighted tree charges leaves outside the support of mu")


def classify_squares(
    mu: MeasureTree,
    weighted: MeasureTree,
    level: int,
    s1: float,
    delta: float,
    span: int,
) -> SquareClassification:
    _require_reweighting(mu, weighted)
    if level + span > mu.depth:
        raise ScheduleError(f"level {level} + gap {span} exceeds depth {mu.depth}")

    base = mu.level(level)
    wl = weighted.level(level)
    pos = np.searchsorted(wl.keys, base.keys)
    pos = np.minimum(pos, len(wl) - 1)
    hit = wl.keys[pos] == base.keys

    _, energies = local_energies(mu, level, span, s1)
    heavy_at = 2.0 ** (-(s1 + 5 * delta) * level)
    retain = 2.0 ** (-4 * delta * level)
    energy_cap = 2.0 ** (6 * delta * level)

    labels = []
    for i, key in enumerate(base.keys):
        m = base.masses[i]
        w = wl.masses[pos[i]] if hit[i] else mu.zero
        fm, fw = float(m), float(w)
        good = fw > 0 and fw >= retain * fm and energies[i] <= energy_cap
        labels.append(
            SquareLabel(
                cube=CubeIndex.from_key(mu.dim, level, int(key)),
                heavy=fm > heavy_at,
                good=bool(good),
                mass=m,
                weighted_mass=w,
                local_energy=float(energies[i]),
            )
        )
    return SquareClassification(
        level=level, span=span, s1=s1, delta=delta, mode=mu.mode, labels=tuple(labels)
    )


def good_square_entropy(weighted: MeasureTree, result: SquareClassification, y) -> float | None:
    """
    Mean of H(mu~^Q_theta(x_Q, y), D_span) / span over the good squares,
    weighted by mu~(Q). None when there are no good squares or span is 0.
    """
    good = [q for q in result.labels if q.good]
    if not good or result.span == 0:
        return None
    weights = np.array([float(q.weighted_mass) for q in good])
    values = np.array(
        [local_projection_entropy(weighted, q.cube, y, result.span) / result.span for q in good]
    )
    return float((weights * values).sum() / weights.sum())


def bad_mass_profile(classifications) -> list[float]:
    """Bad-mass fraction of the weighted measure per classified level."""
    out = []
    for c in classifications:
        total = float(c.good_mass) + float(c.bad_mass)
        out.append(float(c.bad_mass) / total if total > 0 else 0.0)
    return out

