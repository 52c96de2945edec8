# src/fractalmeter/engine/ops.py

"""
Filesystem-level operations and serialisation.

This module contains:
- measure files (write, load with validation, canonical digest),
- JSON reports and JSON lines,
- CSV tables (per-scale, per-angle, per-level rows),
- YAML echo of generator and experiment specs.

No computation is performed here.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, TextIO

import numpy as np
import sympy
import yaml

from . import sparse
from .experiment import ExperimentSpec
from .generators import generate
from .measure import from_coords, with_mode
from .model import MeasureTree, Mode
from .parse import MEASURE_FORMAT, ParseError, parse_measure_file
from .validate import validate_document, validate_tree


# ---------------------------------------------------------------------
# Measure files
# ---------------------------------------------------------------------

def measure_to_dict(tree: MeasureTree) -> dict[str, Any]:
    """
    Canonical file form of a tree: header plus leaves in Morton order.
    """
    coords = sparse.decode(tree.leaves.keys, tree.dim, tree.depth)
    leaves: list[list[Any]] = []
    for c, mass in zip(coords.tolist(), tree.leaves.masses):
        if tree.mode is Mode.RATIONAL:
            f = Fraction(mass)
            leaves.append([tree.depth, *c, f.numerator, f.denominator])
        else:
            leaves.append([tree.depth, *c, float(mass)])
    return {
        "format": MEASURE_FORMAT,
        "dim": tree.dim,
        "depth": tree.depth,
        "mode": tree.mode.value,
        "leaves": leaves,
    }


def write_measure(tree: MeasureTree, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(_dumps_compact(measure_to_dict(tree)) + "\n", encoding="utf-8")
    return p


def load_measure(path: str | Path) -> MeasureTree:
    """
    Load a measure file, rebuild its ancestors and validate the result.

    Raises ParseError for malformed files and ValidationError when the
    leaves or the rebuilt tree break a measure rule.
    """
    doc = parse_measure_file(path)
    validate_document(doc).raise_for_issues()

    coords = np.array([c for _, c, _ in doc.rows], dtype=np.int64).reshape(-1, doc.dim)
    masses = [m for _, _, m in doc.rows]
    tree = from_coords(doc.dim, doc.depth, coords, masses, doc.mode)

    validate_tree(tree, doc.path).raise_for_issues()
    return tree


def load_spec_measure(spec: ExperimentSpec) -> MeasureTree:
    """Generate or load the measure of an experiment spec, in the spec's mode when it names one."""
    if spec.measure is not None:
        return generate(spec.measure if spec.mode is None else spec.measure.in_mode(spec.mode))
    tree = load_measure(spec.measure_file)
    return tree if spec.mode is None else with_mode(tree, spec.mode)


def tree_digest(tree: MeasureTree) -> str:
    """sha256 of the canonical leaf table; equal trees give equal digests."""
    return hashlib.sha256(_dumps_compact(measure_to_dict(tree)).encode("utf-8")).hexdigest()


def _dumps_compact(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=json_default)


# ---------------------------------------------------------------------
# JSON reports
# ---------------------------------------------------------------------

def json_default(obj: Any) -> Any:
    """Encoder hook for exact scalars and numpy values."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, sympy.Basic):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps_report(data: Mapping[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=json_default) + "\n"


def dumps_line(data: Mapping[str, Any]) -> str:
    """One JSON line (no trailing newline)."""
    return json.dumps(data, sort_keys=True, default=json_default)


def write_report(data: Mapping[str, Any], path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps_report(data), encoding="utf-8")
    return p


def load_report(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(str(p), f"Cannot read file: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(str(p), f"Invalid JSON: {e}") from e
    if not isinstance(data, dict) or "scales" not in data or "schema_version" not in data:
        raise ParseError(str(p), "Not an experiment report")
    return data


# ---------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------

def write_csv(rows: Sequence[Mapping[str, Any]], out: str | Path | TextIO, fieldnames: Iterable[str] | None = None) -> None:
    """
    Write dict rows as CSV. Column order is `fieldnames`, or the keys of
    the first row.
    """
    names = list(fieldnames) if fieldnames is not None else (list(rows[0]) if rows else [])
    if isinstance(out, (str, Path)):
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", newline="", encoding="utf-8") as f:
            _write_rows(f, names, rows)
    else:
        _write_rows(out, names, rows)


def _write_rows(f: TextIO, names: list[str], rows: Sequence[Mapping[str, Any]]) -> None:
    w = csv.DictWriter(f, fieldnames=names, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _cell(v) for k, v in row.items()})


def _cell(v: Any) -> Any:
    if v is None:
        return ""
    if isinstance(v, (Fraction, sympy.Basic)):
        return str(v)
    return v


def csv_text(rows: Sequence[Mapping[str, Any]], fieldnames: Iterable[str] | None = None) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, fieldnames)
    return buf.getvalue()


# ---------------------------------------------------------------------
# YAML specs
# ---------------------------------------------------------------------

def dump_spec(data: Mapping[str, Any]) -> str:
    return yaml.safe_dump(dict(data), sort_keys=False, allow_unicode=True)


def write_spec(data: Mapping[str, Any], path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dump_spec(data), encoding="utf-8")
    return p
