# src/fractalmeter/engine/experiment.py

"""
The pinned-distance experiment.

Given a planar measure, a set of candidate pins and a target t, the run:
- builds the hyperdyadic schedule for eps and checks the Frostman-type
  bound with delta = eps**2,
- picks the best vantage pin y from the candidates,
- forms A_1, the leaves whose direction to y lies in their direction set,
- stresses A_1 with a finite family of subsets A_2 carrying at least
  k**-2 of its mass (random subsets, single annuli around y),
- reports the worst normalized entropy H_{m_k}(Delta_y mu_{A_2}) / span,
  span being m_k, or m_k - a for an annulus of width 2**-a,
  the per-scale square classification and the multiscale bound.

The family of subsets is a stress test, not the worst case over all
subsets.
"""

import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Final, Sequence

import numpy as np

from .. import __version__
from .directions import (
    DEFAULT_N_ANGLES,
    direction_set_table,
    vantage_mask,
    vantage_search,
)
from .entropy import partition_entropy
from .generators import GeneratorSpec
from .measure import discretize, normalize, restrict_leaves
from .model import MeasureError, MeasureTree, Mode, ScheduleError
from .pinned import (
    DEFAULT_SEPARATION,
    LINEARIZATION_CONSTANT_BITS,
    box_dimension_profile,
    covering_constant,
    frostman_constant,
    multiscale_entropy_bound,
    pinned_pushforward,
    require_separated,
)
from .schedule import ScaleSchedule
from .squares import classify_squares, good_square_entropy
from ..utils.parallel import ordered_map
from ..utils.rng import StableRng


logger = logging.getLogger(__name__)

SCHEMA_VERSION: Final[int] = 2

# Entropy shortfall allowed on good squares, and in the final chain bound,
# in units of eps.
GOOD_SQUARE_LOSS: Final[int] = 17
CHAIN_LOSS: Final[int] = 20


# ---------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ExperimentSpec:
    """
    A complete, re-runnable experiment description.

    Exactly one of `measure` (a generator spec) and `measure_file` is set.
    `mode`, when given, is the numeric mode the measure is run in, for a
    generated and a loaded measure alike.
    """

    candidates: tuple[tuple[float, float], ...]
    measure: GeneratorSpec | None = None
    measure_file: str | None = None
    t: float = 0.8
    eps: float = 0.3
    s: float = 1.5
    j0: int | None = None
    n_angles: int = DEFAULT_N_ANGLES
    separation: float = DEFAULT_SEPARATION
    frostman_c: float | None = None
    n_random_subsets: int = 8
    annulus_level: int = 3
    seed: int = 0
    mode: Mode | None = None

    def __post_init__(self) -> None:
        if (self.measure is None) == (self.measure_file is None):
            raise MeasureError("give exactly one of a generator spec and a measure file")
        if not self.candidates:
            raise MeasureError("no vantage candidates given")
        if not 0 < self.eps < 1:
            raise MeasureError("eps must lie in (0, 1)")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.measure is not None:
            out["measure"] = self.measure.to_dict()
        else:
            out["measure"] = {"file": self.measure_file}
        out["candidates"] = [list(c) for c in self.candidates]
        for name in (
            "t",
            "eps",
            "s",
            "j0",
            "n_angles",
            "separation",
            "frostman_c",
            "n_random_subsets",
            "annulus_level",
            "seed",
        ):
            out[name] = getattr(self, name)
        if self.mode is not None:
            out["mode"] = self.mode.value
        return out


# ---------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ScaleRow:
    j: int
    m: int
    d: int
    squares: int
    heavy: int
    good: int
    good_mass: float
    bad_mass: float
    bad_bound: float
    light_mass: float
    light_bound: float
    light_holds: bool
    local_entropy: float | None
    local_target: float
    direction_fail: float | None


@dataclass(frozen=True, slots=True)
class AdversaryRow:
    """
    One stressed subset.

    `span` is the number of distance bits the subset can carry at level m_k:
    m_k for A1 and the random subsets, m_k - a for an annulus of width 2**-a,
    whose distances all lie in one level-a cell. `entropy` is bits / span.
    """

    name: str
    mass: float
    bits: float
    span: int
    entropy: float


@dataclass(frozen=True, slots=True)
class ExperimentReport:
    params: dict[str, Any]
    vantage: dict[str, Any]
    frostman: dict[str, Any]
    brackets: dict[str, Any]
    a1_mass: float
    a1_fallback: bool
    adversaries: tuple[AdversaryRow, ...]
    worst: str
    entropy: float
    entropy_bits: float
    chain_bound: float
    verdict: bool
    multiscale: dict[str, Any] | None
    scales: tuple[ScaleRow, ...]
    spec: dict[str, Any] | None = None
    schema_version: int = SCHEMA_VERSION
    version: str = __version__
    timestamp: str = ""

    @property
    def chain_holds(self) -> bool:
        return self.entropy_bits >= self.chain_bound

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["chain_holds"] = self.chain_holds
        return out


# ---------------------------------------------------------------------
# Subset family
# ---------------------------------------------------------------------

@dataclass(slots=True)
class _Family:
    names: list[str] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)
    spans: list[int] = field(default_factory=list)

    def add(self, name: str, mask: np.ndarray, span: int) -> None:
        self.names.append(name)
        self.masks.append(mask)
        self.spans.append(span)


def _subset_family(
    tree: MeasureTree,
    y: Sequence[float],
    a1: np.ndarray,
    k: int,
    level: int,
    n_random: int,
    annulus_level: int,
    seed: int,
) -> _Family:
    masses = np.asarray(tree.leaves.masses, dtype=np.float64)
    a1_mass = float(masses[a1].sum())
    target = a1_mass / max(k, 1) ** 2
    members = np.flatnonzero(a1)

    family = _Family()
    family.add("A1", a1, level)

    rng = StableRng(seed)
    for i in range(n_random):
        order = members[np.argsort(rng.raw(len(members)), kind="stable")]
        cum = np.cumsum(masses[order])
        stop = int(np.searchsorted(cum, target * (1 - 1e-12))) + 1
        mask = np.zeros(len(masses), dtype=bool)
        mask[order[:stop]] = True
        family.add(f"random-{i}", mask, level)

    # an annulus of width 2**-a pushes into one level-a cell of the distance line
    span = level - annulus_level
    if span <= 0:
        return family
    centres = tree.centers()
    dist = np.hypot(centres[:, 0] - y[0], centres[:, 1] - y[1])
    ring = np.floor(dist * 2.0**annulus_level).astype(np.int64)
    for r in np.unique(ring[a1]):
        mask = a1 & (ring == r)
        if float(masses[mask].sum()) >= target * (1 - 1e-12):
            family.add(f"annulus-{int(r)}", mask, span)
    return family


def _pinned_entropy(tree: MeasureTree, mask: np.ndarray, y: Sequence[float], level: int) -> float:
    sub = normalize(restrict_leaves(tree, mask))
    return partition_entropy(pinned_pushforward(discretize(sub, sub.depth), y, level)).bits


# ---------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------

def run_distance_experiment(
    tree: MeasureTree,
    candidates: Sequence[Sequence[float]],
    t: float,
    eps: float,
    s: float,
    *,
    j0: int | None = None,
    n_angles: int = DEFAULT_N_ANGLES,
    separation: float = DEFAULT_SEPARATION,
    frostman_c: float | None = None,
    n_random_subsets: int = 8,
    annulus_level: int = 3,
    seed: int = 0,
    spec: dict[str, Any] | None = None,
) -> ExperimentReport:
    if tree.dim != 2:
        raise MeasureError("the distance experiment needs a planar measure")
    if not candidates:
        raise MeasureError("no vantage candidates given")

    delta = eps * eps
    s1 = s - 2 * delta
    schedule = ScaleSchedule.hyperdyadic(eps, tree.depth)
    if schedule.last == 0:
        raise ScheduleError(f"depth {tree.depth} is too small for eps={eps}")
    k, m_k = schedule.k, schedule.last
    j0 = schedule.default_j0() if j0 is None else j0

    # hypotheses: checked and reported, never assumed
    c_frostman = frostman_constant(tree, s, delta)
    frostman_ok = frostman_c is None or c_frostman <= frostman_c
    if not frostman_ok:
        logger.warning("Frostman constant %.4g exceeds the bound %.4g", c_frostman, frostman_c)

    grid = discretize(tree, tree.depth)
    for c in candidates:
        require_separated(grid, c, separation)

    logger.info("schedule %s, k=%d, j0=%d", schedule.values, k, j0)
    table = direction_set_table(tree, schedule, s, eps, j0, n_angles)
    vantage = vantage_search(tree, candidates, schedule, s, eps, j0, n_angles, table=table)
    y = vantage.point

    a1 = vantage_mask(tree, y, table)
    a1_fallback = not a1.any()
    if a1_fallback:
        logger.warning("no leaf sees %s through its direction set; using the whole support", y)
        a1 = np.ones(len(tree.leaves), dtype=bool)
    masses = np.asarray(tree.leaves.masses, dtype=np.float64)
    a1_mass = float(masses[a1].sum() / masses.sum())

    family = _subset_family(tree, y, a1, k, m_k, n_random_subsets, annulus_level, seed)
    entropies = ordered_map(lambda mask: _pinned_entropy(tree, mask, y, m_k), family.masks)
    rows = tuple(
        AdversaryRow(name=n, mass=float(masses[m].sum() / masses.sum()), bits=h, span=w, entropy=h / w)
        for n, m, w, h in zip(family.names, family.masks, family.spans, entropies)
    )
    worst_i = min(range(len(rows)), key=lambda i: (rows[i].entropy, i))
    worst = rows[worst_i]
    logger.info("worst subset %s: %.4f of %d bits (%.4f)", worst.name, worst.bits, worst.span, worst.entropy)

    weighted = restrict_leaves(tree, family.masks[worst_i])
    scales = _scale_rows(tree, weighted, y, schedule, s1, delta, eps, table.scales, table.fail_fractions)
    multiscale = _multiscale(normalize(weighted), y, schedule)

    return ExperimentReport(
        params={
            "t": t,
            "eps": eps,
            "s": s,
            "delta": delta,
            "s1": s1,
            "j0": j0,
            "k": k,
            "schedule": list(schedule.values),
            "depth": tree.depth,
            "mode": tree.mode.value,
            "n_angles": n_angles,
            "separation": separation,
            "seed": seed,
            "linearization_admissible": schedule.linearization_admissible,
            "vantage_admissible": schedule.vantage_admissible(j0),
        },
        vantage={
            "point": list(vantage.point),
            "score": vantage.score,
            "index": vantage.index,
            "scores": list(vantage.scores),
        },
        frostman={"constant": c_frostman, "bound": frostman_c, "ok": frostman_ok},
        brackets={
            "covering_constant": covering_constant(tree, s, delta),
            "box_dimension": box_dimension_profile(tree)[-1] if tree.depth else None,
            "linearization_constant": LINEARIZATION_CONSTANT_BITS,
            "separation": separation,
        },
        a1_mass=a1_mass,
        a1_fallback=a1_fallback,
        adversaries=rows,
        worst=worst.name,
        entropy=worst.entropy,
        entropy_bits=worst.bits,
        chain_bound=(1 - CHAIN_LOSS * eps) * worst.span,
        verdict=worst.entropy >= t,
        multiscale=multiscale,
        scales=scales,
        spec=spec,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _scale_rows(
    tree: MeasureTree,
    weighted: MeasureTree,
    y: Sequence[float],
    schedule: ScaleSchedule,
    s1: float,
    delta: float,
    eps: float,
    direction_scales: tuple[int, ...],
    fail_fractions: tuple[float, ...],
) -> tuple[ScaleRow, ...]:
    fail = dict(zip(direction_scales, fail_fractions))
    total = float(weighted.total)

    def row(j: int) -> ScaleRow:
        m, d = schedule.values[j], schedule.gaps[j]
        c = classify_squares(tree, weighted, m, s1, delta, d)
        return ScaleRow(
            j=j,
            m=m,
            d=d,
            squares=len(c.labels),
            heavy=c.heavy_count,
            good=c.good_count,
            good_mass=float(c.good_mass) / total,
            bad_mass=float(c.bad_mass) / total,
            bad_bound=c.bad_mass_bound,
            light_mass=float(c.light_mass),
            light_bound=c.light_bound,
            light_holds=c.light_bound_holds,
            local_entropy=good_square_entropy(weighted, c, y),
            local_target=1 - GOOD_SQUARE_LOSS * eps,
            direction_fail=fail.get(j),
        )

    return tuple(ordered_map(row, range(schedule.k)))


def _multiscale(tree: MeasureTree, y: Sequence[float], schedule: ScaleSchedule) -> dict[str, Any] | None:
    if not schedule.linearization_admissible:
        logger.warning("schedule %s is not linearization-admissible; skipping the bound", schedule.values)
        return None
    bound = multiscale_entropy_bound(tree, y, schedule)
    return {
        "lhs": bound.lhs,
        "rhs_sum": bound.rhs_sum,
        "per_scale": list(bound.per_scale),
        "k": bound.k,
        "constant": bound.constant,
        "margin": bound.margin,
        "holds": bound.holds,
    }


def run_spec(spec: ExperimentSpec, tree: MeasureTree) -> ExperimentReport:
    """Run an experiment spec on its (already generated or loaded) measure."""
    return run_distance_experiment(
        tree,
        spec.candidates,
        spec.t,
        spec.eps,
        spec.s,
        j0=spec.j0,
        n_angles=spec.n_angles,
        separation=spec.separation,
        frostman_c=spec.frostman_c,
        n_random_subsets=spec.n_random_subsets,
        annulus_level=spec.annulus_level,
        seed=spec.seed,
        spec=spec.to_dict(),
    )


def candidate_grid(lo: float, hi: float, n: int) -> tuple[tuple[float, float], ...]:
    """n x n pins on [lo, hi]**2, row by row (y outer, x inner)."""
    if n < 1:
        raise MeasureError("candidate grid needs n >= 1")
    values = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if n > 1 else [lo]
    return tuple((x, yv) for yv in values for x in values)

