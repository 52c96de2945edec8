# src/fractalmeter/engine/suites.py

"""
Verification suites run by `fractalmeter verify`.

- identities: exact rational identities (energy against the pairwise
  double sum, block telescoping, the discretization scaling law),
- inequalities: entropy inequalities on random beta-model measures and
  the projection / Sobolev comparability brackets,
- pipeline: the degenerate circle configuration, the flagship verdict on
  the three-branch measure with its square accounting, the multiscale
  bound across the generator family, direction-set decay, depth
  stability, direction incidence and determinism.

Each check yields one CheckResult; a suite passes when all of them do.
"""

import logging
from dataclasses import dataclass, field
from math import pi
from typing import Any, Callable, Final, Iterator, Union

import numpy as np

from .directions import direction_incidence, direction_set_table
from .energy import (
    block_decomposition,
    correlation_profile,
    dyadic_energy,
    pairwise_dyadic_energy,
)
from .entropy import (
    conditional_entropy,
    entropy_lower_bound_from_l2,
    normalized_entropy,
    partition_entropy,
)
from .experiment import candidate_grid, run_distance_experiment
from .generators import (
    beta_model_measure,
    branching_measure,
    circle_measure,
    digit_restricted_measure,
    line_measure,
)
from .measure import discretize, refine_uniform
from .model import ENTROPY_SLACK, Direction, MeasureError, Mode, pow2, scalars_equal
from .pinned import DEFAULT_SEPARATION, multiscale_entropy_bound
from .projection import l2_comparison, marstrand_integral
from .schedule import ScaleSchedule
from ..utils.rng import StableRng


logger = logging.getLogger(__name__)

SIZES: Final[dict[str, int]] = {"small": 10, "medium": 50, "large": 1000}

L2_BRACKET: Final[tuple[float, float]] = (1 / 100, 100.0)
MARSTRAND_BRACKET: Final[tuple[float, float]] = (0.02, 50.0)
# Marstrand ratios are compared at this depth and at twice it.
MARSTRAND_DEPTH: Final[int] = 4
# Depth of the flagship three-branch experiment.
FLAGSHIP_DEPTH: Final[int] = 10


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.name, "passed": self.passed, **self.detail}


def resolve_size(size: Union[str, int]) -> int:
    if isinstance(size, int):
        n = size
    elif size in SIZES:
        n = SIZES[size]
    else:
        try:
            n = int(size)
        except ValueError:
            raise MeasureError(f"unknown suite size: {size!r}") from None
    if n < 1:
        raise MeasureError("suite size must be >= 1")
    return n


def _pick(rng: StableRng, n: int) -> int:
    return int(rng.raw(1)[0] % n)


# ---------------------------------------------------------------------
# Identities (rational mode)
# ---------------------------------------------------------------------

def identities(n: int, seed: int) -> Iterator[CheckResult]:
    rng = StableRng(seed)

    for i in range(n):
        dim = 1 + _pick(rng, 2)
        depth = 1 + _pick(rng, 4)
        s = 0.5 if dim == 1 else (0.5, 1.0, 1.5)[_pick(rng, 3)]
        p = 0.5 + 0.5 * float(rng.uniform(1)[0])
        tree = beta_model_measure(p, depth, seed=seed * 1000 + i, dim=dim, mode=Mode.RATIONAL)
        ok = scalars_equal(dyadic_energy(tree, s), pairwise_dyadic_energy(tree, s))
        yield CheckResult(f"energy-pairwise-{i}", ok, {"dim": dim, "depth": depth, "s": s})

    for i in range(n):
        dim = 1 + _pick(rng, 2)
        depth = (4 + _pick(rng, 9)) if dim == 1 else (2 + _pick(rng, 5))
        s = 0.5 if dim == 1 else (0.5, 1.0, 1.5)[_pick(rng, 3)]
        eps = 0.2 + 0.1 * _pick(rng, 6)
        tree = beta_model_measure(0.6, depth, seed=seed * 1000 + n + i, dim=dim, mode=Mode.RATIONAL)
        schedule = ScaleSchedule.hyperdyadic(eps, depth)
        blocks = block_decomposition(tree, s, schedule)
        terms = correlation_profile(tree, s).terms[: schedule.last]
        ok = scalars_equal(sum(blocks, 0), sum(terms, 0))
        yield CheckResult(f"block-telescoping-{i}", ok, {"dim": dim, "depth": depth, "eps": eps})

    for i in range(min(n, 20)):
        dim = 1 + _pick(rng, 2)
        m = 1 + _pick(rng, 3)
        extra = 1 + _pick(rng, 3)
        s = 0.5 if dim == 1 else 1.5
        tree = beta_model_measure(0.7, m, seed=seed * 1000 + 2 * n + i, dim=dim, mode=Mode.RATIONAL)
        refined = refine_uniform(tree, m + extra)
        lhs = correlation_profile(refined, s).terms[m + extra - 1]
        rhs = pow2(s - dim, extra, Mode.RATIONAL) * correlation_profile(tree, s).terms[m - 1]
        yield CheckResult(f"scaling-law-{i}", scalars_equal(lhs, rhs), {"dim": dim, "m": m, "extra": extra})


# ---------------------------------------------------------------------
# Inequalities (float mode)
# ---------------------------------------------------------------------

def inequalities(n: int, seed: int) -> Iterator[CheckResult]:
    rng = StableRng(seed)
    for i in range(n):
        depth = 2 + _pick(rng, 7)
        p = 0.3 + 0.7 * float(rng.uniform(1)[0])
        tree = beta_model_measure(p, depth, seed=seed * 100000 + i, dim=2)
        violations = []
        for m in range(1, depth + 1):
            grid = discretize(tree, m)
            h = normalized_entropy(grid)
            if h < entropy_lower_bound_from_l2(grid) - ENTROPY_SLACK:
                violations.append(f"l2-bound@{m}")
            if h * m > 2 * m + ENTROPY_SLACK:
                violations.append(f"size-bound@{m}")
            for b in range(0, m):
                chain = partition_entropy(discretize(tree, b)).bits + conditional_entropy(tree, m, b).bits
                if abs(chain - h * m) > ENTROPY_SLACK:
                    violations.append(f"chain@{m}|{b}")
        yield CheckResult(f"entropy-{i}", not violations, {"depth": depth, "p": p, "violations": violations})

    for i in range(min(n, 100)):
        depth = 3 + _pick(rng, 4)
        tree = beta_model_measure(0.6, depth, seed=seed * 100000 + n + i, dim=2)
        angle = 2 * pi * float(rng.uniform(1)[0])
        ratio = l2_comparison(discretize(tree, depth), Direction.of(angle)).ratio
        lo, hi = L2_BRACKET
        yield CheckResult(f"l2-comparison-{i}", lo <= ratio <= hi, {"ratio": ratio, "angle": angle})

    family = [
        lambda depth: branching_measure([0, 1, 2, 3], depth),
        lambda depth: branching_measure([0, 1, 3], depth),
        lambda depth: branching_measure([0, 3], depth),
        lambda depth: digit_restricted_measure(depth, "never", dim=2),
        lambda depth: beta_model_measure(0.7, depth, seed=seed),
    ]
    lo, hi = MARSTRAND_BRACKET
    for i, make in enumerate(family):
        shallow, deep = make(MARSTRAND_DEPTH), make(2 * MARSTRAND_DEPTH)
        for gamma in (0.05, 0.2):
            a = marstrand_integral(shallow, gamma).ratio
            b = marstrand_integral(deep, gamma).ratio
            yield CheckResult(f"marstrand-{i}-{gamma}", lo <= a <= hi and lo <= b <= hi, {"ratios": [a, b]})
            yield _doubling_check(f"marstrand-doubling-{i}-{gamma}", a, b)


def _doubling_check(name: str, shallow: float, deep: float) -> CheckResult:
    """Doubling the depth moves a Marstrand ratio by less than a factor 2."""
    change = deep / shallow
    return CheckResult(name, 0.5 < change < 2.0, {"ratios": [shallow, deep], "change": change})


# ---------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------

def _report_key(report) -> dict[str, Any]:
    d = report.to_dict()
    d.pop("timestamp")
    return d


def _trend(values) -> float:
    """Least-squares slope of values against their position."""
    if len(values) < 2:
        return 0.0
    return float(np.polyfit(np.arange(len(values)), np.asarray(values, dtype=np.float64), 1)[0])


def pipeline(n: int, seed: int) -> Iterator[CheckResult]:
    n_angles = 256

    circle = circle_measure((0.5, 0.5), 0.3, 8)
    degenerate = run_distance_experiment(circle, [(0.5, 0.5)], 0.8, 0.3, 1.5, n_angles=n_angles, seed=seed)
    yield CheckResult(
        "circle-degenerate",
        not degenerate.verdict and degenerate.entropy <= 0.15,
        {"entropy": degenerate.entropy},
    )

    flagship = branching_measure([0, 1, 3], FLAGSHIP_DEPTH)
    candidates = candidate_grid(-1.0, -DEFAULT_SEPARATION, 3)
    first = run_distance_experiment(flagship, candidates, 0.8, 0.3, 1.5, n_angles=n_angles, seed=seed)
    yield CheckResult(
        "flagship-verdict",
        first.verdict and first.entropy >= 0.8,
        {"entropy": first.entropy, "worst": first.worst, "verdict": first.verdict},
    )
    yield CheckResult(
        "light-mass-accounting",
        all(row.light_holds for row in first.scales),
        {"levels": [row.m for row in first.scales]},
    )
    upper = [row.bad_mass for row in first.scales[len(first.scales) // 2 :]]
    yield CheckResult(
        "bad-mass-decay",
        bool(upper) and upper[-1] <= upper[0] + 1e-12 and _trend(upper) <= 1e-12,
        {"levels": [row.m for row in first.scales[len(first.scales) // 2 :]], "bad_mass": upper},
    )
    again = run_distance_experiment(flagship, candidates, 0.8, 0.3, 1.5, n_angles=n_angles, seed=seed)
    yield CheckResult("experiment-deterministic", _report_key(first) == _report_key(again))

    family = {
        "uniform": branching_measure([0, 1, 2, 3], 8),
        "three-branch": branching_measure([0, 1, 3], 8),
        "two-branch": branching_measure([0, 3], 8),
        "digit": digit_restricted_measure(8, dim=2),
        "beta": beta_model_measure(0.7, 8, seed=seed),
        "circle": circle,
        "line": line_measure(8),
    }
    for name, tree in family.items():
        for eps in (0.3, 0.5, 0.8):
            schedule = ScaleSchedule.hyperdyadic(eps, 8)
            if not schedule.linearization_admissible:
                logger.info("schedule %s is not linearization-admissible; skipping %s", schedule.values, name)
                continue
            bound = multiscale_entropy_bound(tree, (-1.0, -1.0), schedule)
            yield CheckResult(f"multiscale-bound-{name}-{eps}", bound.holds, {"margin": bound.margin})

    # a horizontal segment fails near the vertical projection; wider gaps fail less
    table = direction_set_table(line_measure(8), ScaleSchedule.from_values((0, 1, 3, 8)), 0.5, 0.3, 0, n_angles)
    fails = list(table.fail_fractions)
    yield CheckResult(
        "direction-fail-decay",
        fails[-1] < fails[0] and all(b <= a + 1 / n_angles for a, b in zip(fails, fails[1:])),
        {"gaps": list(table.gaps), "fail": fails},
    )

    shallow = marstrand_integral(branching_measure([0, 3], MARSTRAND_DEPTH), 0.2).ratio
    deep = marstrand_integral(branching_measure([0, 3], 2 * MARSTRAND_DEPTH), 0.2).ratio
    yield _doubling_check("marstrand-doubling-two-branch", shallow, deep)

    uniform = family["uniform"]
    incidence = direction_incidence(uniform, uniform, 0.05, n_samples=max(256, 64 * n), seed=seed)
    yield CheckResult("direction-incidence", incidence > 0.9, {"incidence": incidence})


SUITES: Final[dict[str, Callable[[int, int], Iterator[CheckResult]]]] = {
    "identities": identities,
    "inequalities": inequalities,
    "pipeline": pipeline,
}


def run_suite(name: str, size: Union[str, int] = "small", seed: int = 0) -> Iterator[CheckResult]:
    if name not in SUITES:
        raise MeasureError(f"unknown suite: {name!r}")
    n = resolve_size(size)
    logger.info("running suite %s (n=%d, seed=%d)", name, n, seed)
    for result in SUITES[name](n, seed):
        if not result.passed:
            logger.warning("check %s failed: %s", result.name, result.detail)
        yield result
