# src/fractalmeter/engine/validate.py

"""
Measure validation rules.

This module checks parsed measure files and built trees against the
rules every measure must satisfy:
- leaves sit at the declared depth with in-range coordinates,
- masses are non-negative with a positive total,
- no leaf appears twice,
- every parent mass equals the sum of its children (exactly in
  rational mode, to FLOAT_RTOL in float mode).

It does NOT perform parsing or tree construction.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sparse
from .model import FLOAT_RTOL, MeasureTree, Mode


# ---------------------------------------------------------------------
# Exceptions
# ---------------------------------------------------------------------

class ValidationError(Exception):
    """
    Fatal validation error used for command flow control.

    Raised when a measure fails validation and the operation cannot
    continue.
    """


# ---------------------------------------------------------------------
# Result objects
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ValidationIssue:
    """
    A single validation problem.

    `code` is a stable identifier suitable for tests and filtering.
    """

    code: str
    message: str


@dataclass(frozen=True, slots=True)
class ValidationResult:
    """
    Aggregated validation result for a single measure.
    """

    path: str
    issues: Sequence[ValidationIssue]

    @property
    def ok(self) -> bool:
        return not self.issues

    def raise_for_issues(self) -> None:
        if self.issues:
            lines = "; ".join(f"[{i.code}] {i.message}" for i in self.issues)
            raise ValidationError(f"{self.path}: {lines}")


# ---------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------

# At most this many issues of one code are reported per measure.
MAX_ISSUES_PER_CODE = 5


def validate_document(doc) -> ValidationResult:
    """
    Validate the leaf rows of a parsed measure file (parse.MeasureDocument).

    Notes:
    - Header types are parse-layer responsibilities.
    - Ancestors are not part of the file; consistency of the rebuilt
      tree is checked by validate_tree.
    """
    issues: list[ValidationIssue] = []

    def add(code: str, message: str) -> None:
        if sum(1 for i in issues if i.code == code) < MAX_ISSUES_PER_CODE:
            issues.append(ValidationIssue(code=code, message=message))

    if doc.dim not in sparse.MAX_LEVEL:
        add("dim", f"dim must be 1 or 2, got {doc.dim}")
        return ValidationResult(path=doc.path, issues=issues)
    if not 0 <= doc.depth <= sparse.MAX_LEVEL[doc.dim]:
        add("depth", f"depth {doc.depth} out of range 0..{sparse.MAX_LEVEL[doc.dim]}")
        return ValidationResult(path=doc.path, issues=issues)

    side = 1 << doc.depth
    seen: set[tuple[int, ...]] = set()
    total_positive = False
    for i, (level, coords, mass) in enumerate(doc.rows, start=1):
        if level != doc.depth:
            add("leaf_level", f"leaves[{i}] at level {level}, expected {doc.depth}")
        if any(c < 0 or c >= side for c in coords):
            add("coord_range", f"leaves[{i}] coordinates {list(coords)} outside 0..{side - 1}")
        if coords in seen:
            add("duplicate", f"leaves[{i}] repeats cube {list(coords)}")
        seen.add(coords)
        if mass < 0:
            add("negative_mass", f"leaves[{i}] has negative mass {mass}")
        elif mass > 0:
            total_positive = True
        if doc.mode is Mode.FLOAT and not np.isfinite(mass):
            add("non_finite", f"leaves[{i}] has non-finite mass")

    if not total_positive:
        add("zero_mass", "measure has no positive mass")

    return ValidationResult(path=doc.path, issues=issues)


def _masses_agree(a: np.ndarray, b: np.ndarray, mode: Mode) -> bool:
    if mode is Mode.RATIONAL:
        return bool(np.all(a == b))
    return bool(np.allclose(a.astype(np.float64), b.astype(np.float64), rtol=FLOAT_RTOL, atol=0.0))


def validate_tree(tree: MeasureTree, path: str = "<tree>") -> ValidationResult:
    """
    Validate the structural invariants of a tree at every level.
    """
    issues: list[ValidationIssue] = []

    for m, lv in enumerate(tree.levels):
        keys, masses = lv.keys, lv.masses
        if len(keys) and (keys[0] < 0 or keys[-1] >= (1 << (tree.dim * m))):
            issues.append(ValidationIssue("key_range", f"level {m} has keys outside D_{m}"))
        if len(keys) > 1 and not bool(np.all(np.diff(keys) > 0)):
            issues.append(ValidationIssue("key_order", f"level {m} keys are not strictly increasing"))
        if sparse.is_exact(masses) != (tree.mode is Mode.RATIONAL):
            issues.append(ValidationIssue("mode", f"level {m} masses do not match mode {tree.mode.value}"))
        if len(masses) and not bool(np.all(masses > 0)):
            issues.append(ValidationIssue("nonpositive_mass", f"level {m} stores a non-positive mass"))

    if issues:
        return ValidationResult(path=path, issues=issues)

    for m in range(tree.depth):
        child = tree.levels[m + 1]
        keys, sums = sparse.group_sum(child.keys >> tree.dim, child.masses)
        parent = tree.levels[m]
        if not np.array_equal(keys, parent.keys):
            issues.append(ValidationIssue("support", f"level {m} support differs from the parents of level {m + 1}"))
        elif not _masses_agree(sums, parent.masses, tree.mode):
            issues.append(ValidationIssue("consistency", f"level {m} masses differ from their children's sums"))

    return ValidationResult(path=path, issues=issues)
