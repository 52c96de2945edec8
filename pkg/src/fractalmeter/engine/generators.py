# src/fractalmeter/engine/generators.py

"""
Generators of test measures with known dimension.

This module contains:
- branching (self-similar) measures with a fixed child pattern,
- digit-restricted measures, whose binary digits are forced to 0 at
  blocked levels,
- beta-model random measures (seeded, integer-only survival decisions),
- arc-length measures of circles and horizontal segments,
- products of two measures on the line,
- GeneratorSpec and its dispatcher.

Every generator returns a normalized tree.
"""

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import floor, isqrt, log2, pi
from typing import Callable, Final, Iterable, Sequence, Union

import numpy as np

from . import sparse
from .measure import build_tree, from_coords, normalize
from .model import GeneratorError, MeasureTree, Mode, mass_array
from ..utils.rng import StableRng


logger = logging.getLogger(__name__)

MAX_RETRIES: Final[int] = 100

# Polyline segments per circle: 2**(level + CIRCLE_SEGMENT_BITS).
CIRCLE_SEGMENT_BITS: Final[int] = 4

Blocked = Union[str, Sequence[int], Callable[[int], bool]]

BLOCKED_RULES: Final[tuple[str, ...]] = ("squares", "never", "always")


# ---------------------------------------------------------------------
# Level-wise branching
# ---------------------------------------------------------------------

def _share(count: int, mode: Mode):
    return Fraction(1, count) if mode is Mode.RATIONAL else 1.0 / count


def _branch(patterns: Iterable[Sequence[int]], dim: int, mode: Mode) -> tuple[np.ndarray, np.ndarray]:
    """
    Leaves of the measure splitting mass equally among patterns[n] at
    level n + 1. Keys come out sorted when every pattern is sorted.
    """
    keys = np.zeros(1, dtype=np.int64)
    masses = mass_array([1], mode)
    for pattern in patterns:
        children = np.asarray(sorted(pattern), dtype=np.int64)
        keys = ((keys[:, None] << dim) | children[None, :]).ravel()
        masses = np.repeat(masses * _share(len(children), mode), len(children))
    return keys, masses


def _check_pattern(pattern: Sequence[int], dim: int) -> list[int]:
    pattern = sorted(set(int(c) for c in pattern))
    if not pattern:
        raise GeneratorError("branching pattern must be nonempty")
    if pattern[0] < 0 or pattern[-1] >= 1 << dim:
        raise GeneratorError(f"pattern entries must lie in 0..{(1 << dim) - 1}")
    return pattern


def branching_measure(
    pattern: Sequence[int],
    depth: int,
    dim: int = 2,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """
    Self-similar measure: at every level the mass of a cube splits equally
    among the children listed in `pattern`.

    Child index of a planar child is x_bit + 2 * y_bit.
    """
    pattern = _check_pattern(pattern, dim)
    keys, masses = _branch([pattern] * depth, dim, mode)
    return build_tree(dim, depth, keys, masses, mode)


# ---------------------------------------------------------------------
# Digit-restricted measures
# ---------------------------------------------------------------------

def even_square_blocked(n: int) -> bool:
    """n lies in S = {n : (2k)**2 <= n < (2k + 1)**2, k >= 1}."""
    root = isqrt(n)
    return root >= 2 and root % 2 == 0


def blocked_predicate(blocked: Blocked) -> Callable[[int], bool]:
    """Accepts "squares", "never", "always", a list of levels or a callable."""
    if callable(blocked):
        return blocked
    if isinstance(blocked, str):
        named = {
            "squares": even_square_blocked,
            "never": lambda n: False,
            "always": lambda n: True,
        }
        if blocked not in named:
            raise GeneratorError(f"unknown blocked-level rule: {blocked!r}")
        return named[blocked]
    levels = frozenset(int(n) for n in blocked)
    return lambda n: n in levels


def digit_restricted_measure(
    depth: int,
    blocked: Blocked = "squares",
    dim: int = 1,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """
    At blocked levels the binary digit is forced to 0 on every axis; at free
    levels the mass splits equally among all children. The planar version
    is the product of two copies on the line.
    """
    if depth < 1:
        raise GeneratorError("digit-restricted measures need depth >= 1")
    is_blocked = blocked_predicate(blocked)
    every = list(range(1 << dim))
    patterns = [[0] if is_blocked(n) else every for n in range(1, depth + 1)]
    keys, masses = _branch(patterns, dim, mode)
    return build_tree(dim, depth, keys, masses, mode)


def free_levels(depth: int, blocked: Blocked = "squares") -> list[int]:
    is_blocked = blocked_predicate(blocked)
    return [n for n in range(1, depth + 1) if not is_blocked(n)]


# ---------------------------------------------------------------------
# Beta model
# ---------------------------------------------------------------------

def _beta_attempt(rng: StableRng, p: float, depth: int, dim: int, mode: Mode):
    n_children = 1 << dim
    offsets = np.arange(n_children, dtype=np.int64)
    keys = np.zeros(1, dtype=np.int64)
    masses = mass_array([1], mode)
    for _ in range(depth):
        alive = rng.survive(p, len(keys) * n_children).reshape(len(keys), n_children)
        counts = alive.sum(axis=1)
        if not counts.any():
            return None
        if mode is Mode.RATIONAL:
            shares = np.array([Fraction(1, int(c)) if c else Fraction(0) for c in counts], dtype=object)
        else:
            shares = np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0)
        child_masses = np.repeat(masses * shares, n_children).reshape(len(keys), n_children)
        child_keys = (keys[:, None] << dim) | offsets[None, :]
        keys, masses = child_keys[alive], child_masses[alive]
    return keys, masses


def beta_model_measure(
    p: float,
    depth: int,
    seed: int = 0,
    dim: int = 2,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """
    Random measure: every child survives independently with probability p
    and the survivors share their parent's mass equally. Extinct draws
    are retried on the same random stream; cubes whose children all died
    lose their mass and the result is renormalized.
    """
    if not 0.0 < p <= 1.0:
        raise GeneratorError(f"survival probability {p} is outside (0, 1]")
    rng = StableRng(seed)
    for attempt in range(MAX_RETRIES):
        found = _beta_attempt(rng, p, depth, dim, mode)
        if found is not None:
            if attempt:
                logger.debug("beta model p=%s seed=%d survived after %d retries", p, seed, attempt)
            return normalize(build_tree(dim, depth, found[0], found[1], mode))
    raise GeneratorError(f"beta model p={p} died out {MAX_RETRIES} times (seed {seed})")


# ---------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------

def _polyline_cells(vertices: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Cells crossed by a polyline and the length of the polyline inside each,
    as a fraction of the total length.
    """
    n = 1 << level
    coords, lengths = [], []
    for p0, p1 in zip(vertices[:-1], vertices[1:]):
        d = p1 - p0
        seg = float(np.hypot(d[0], d[1]))
        cuts = [0.0, 1.0]
        for a in range(2):
            if d[a] == 0.0:
                continue
            lo, hi = sorted((p0[a] * n, p1[a] * n))
            for g in range(floor(lo) + 1, floor(hi) + 1):
                cuts.append((g / n - p0[a]) / d[a])
        cuts = sorted(set(c for c in cuts if 0.0 <= c <= 1.0))
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            mid = p0 + d * (0.5 * (t0 + t1))
            coords.append((int(mid[0] * n), int(mid[1] * n)))
            lengths.append(seg * (t1 - t0))
    lengths = np.asarray(lengths)
    return np.asarray(coords, dtype=np.int64), lengths / lengths.sum()


def circle_measure(
    center: Sequence[float],
    radius: float,
    level: int,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """
    Normalized arc length of a circle inside [0, 1)**2, from a polyline
    with 2**(level + 4) equal segments.
    """
    cx, cy = float(center[0]), float(center[1])
    if radius <= 0:
        raise GeneratorError("radius must be positive")
    if cx - radius < 0 or cy - radius < 0 or cx + radius >= 1 or cy + radius >= 1:
        raise GeneratorError(f"circle ({cx}, {cy}) r={radius} escapes the unit square")

    n_seg = 1 << (level + CIRCLE_SEGMENT_BITS)
    t = np.array([2 * pi * i / n_seg for i in range(n_seg + 1)])
    t[-1] = 0.0
    vertices = np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], axis=1)
    coords, weights = _polyline_cells(vertices, level)
    return normalize(from_coords(2, level, coords, _weights(weights, mode), mode))


def line_measure(
    level: int,
    y: float = 0.5,
    start: float = 0.0,
    stop: float = 1.0,
    mode: Mode = Mode.FLOAT,
) -> MeasureTree:
    """Normalized length on the horizontal segment [start, stop) x {y}."""
    if not 0.0 <= y < 1.0:
        raise GeneratorError(f"segment height {y} is outside [0, 1)")
    if not 0.0 <= start < stop <= 1.0:
        raise GeneratorError(f"segment [{start}, {stop}) is not inside [0, 1]")
    n = 1 << level
    row = int(y * n)
    cols = np.arange(int(start * n), min(int(np.ceil(stop * n)), n), dtype=np.int64)
    overlap = np.minimum((cols + 1) / n, stop) - np.maximum(cols / n, start)
    keep = overlap > 0
    coords = np.stack([cols[keep], np.full(int(keep.sum()), row)], axis=1)
    return normalize(from_coords(2, level, coords, _weights(overlap[keep], mode), mode))


def _weights(values: np.ndarray, mode: Mode) -> np.ndarray:
    # float weights convert to their exact binary fractions
    return mass_array([float(v) for v in values], mode)


# ---------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------

def product_measure(a: MeasureTree, b: MeasureTree) -> MeasureTree:
    """The planar product of two measures on the line (x from a, y from b)."""
    if a.dim != 1 or b.dim != 1:
        raise GeneratorError("product factors must be measures on the line")
    if a.depth != b.depth or a.mode is not b.mode:
        raise GeneratorError("product factors must share depth and mode")
    xa = sparse.decode(a.leaves.keys, 1, a.depth)[:, 0]
    yb = sparse.decode(b.leaves.keys, 1, b.depth)[:, 0]
    coords = np.stack(np.meshgrid(xa, yb, indexing="ij"), axis=-1).reshape(-1, 2)
    masses = np.multiply.outer(a.leaves.masses, b.leaves.masses).reshape(-1)
    return from_coords(2, a.depth, coords, masses, a.mode)


# ---------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------

KINDS: Final[tuple[str, ...]] = ("branching", "digit-restricted", "beta-model", "circle", "line", "product")


@dataclass(frozen=True, slots=True)
class GeneratorSpec:
    """
    A reproducible description of a generated measure.

    Notes:
    - `depth` is the tree depth (the polyline level for curves).
    - `factors` holds the two line specs of a product.
    - Identical specs (seed included) yield identical trees.
    """

    kind: str
    depth: int
    dim: int = 2
    pattern: tuple[int, ...] = ()
    blocked: Union[str, tuple[int, ...]] = "squares"
    p: float = 1.0
    seed: int = 0
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25
    y: float = 0.5
    start: float = 0.0
    stop: float = 1.0
    factors: tuple["GeneratorSpec", ...] = field(default_factory=tuple)
    mode: Mode = Mode.FLOAT

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise GeneratorError(f"unknown generator kind: {self.kind!r}")
        if self.depth < 0:
            raise GeneratorError("depth must be >= 0")
        if self.kind == "product" and len(self.factors) != 2:
            raise GeneratorError("a product needs exactly two factors")

    def in_mode(self, mode: Mode) -> "GeneratorSpec":
        """The same spec in another scalar mode (factors included)."""
        return replace(self, mode=mode, factors=tuple(f.in_mode(mode) for f in self.factors))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "depth": self.depth, "dim": self.dim, "mode": self.mode.value}
        extra = {
            "branching": {"pattern": list(self.pattern)},
            "digit-restricted": {"blocked": self.blocked if isinstance(self.blocked, str) else list(self.blocked)},
            "beta-model": {"p": self.p, "seed": self.seed},
            "circle": {"center": list(self.center), "radius": self.radius},
            "line": {"y": self.y, "start": self.start, "stop": self.stop},
            "product": {"factors": [f.to_dict() for f in self.factors]},
        }[self.kind]
        out.update(extra)
        return out


def generate(spec: GeneratorSpec) -> MeasureTree:
    logger.debug("generating %s depth %d", spec.kind, spec.depth)
    if spec.kind == "branching":
        return branching_measure(spec.pattern, spec.depth, spec.dim, spec.mode)
    if spec.kind == "digit-restricted":
        return digit_restricted_measure(spec.depth, spec.blocked, spec.dim, spec.mode)
    if spec.kind == "beta-model":
        return beta_model_measure(spec.p, spec.depth, spec.seed, spec.dim, spec.mode)
    if spec.kind == "circle":
        return circle_measure(spec.center, spec.radius, spec.depth, spec.mode)
    if spec.kind == "line":
        return line_measure(spec.depth, spec.y, spec.start, spec.stop, spec.mode)
    a, b = (generate(f) for f in spec.factors)
    return product_measure(a, b)


def expected_dimension(spec: GeneratorSpec) -> float:
    """
    Dimension of the limiting measure (the finite-depth free-level
    fraction for custom digit restrictions).
    """
    if spec.kind == "branching":
        return log2(len(set(spec.pattern)))
    if spec.kind == "digit-restricted":
        if spec.blocked == "squares":
            return 0.5 * spec.dim
        return spec.dim * len(free_levels(spec.depth, spec.blocked)) / max(spec.depth, 1)
    if spec.kind == "beta-model":
        return max(log2((1 << spec.dim) * spec.p), 0.0)
    if spec.kind in ("circle", "line"):
        return 1.0
    return sum(expected_dimension(f) for f in spec.factors)
