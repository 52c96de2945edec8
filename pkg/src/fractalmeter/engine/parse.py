# src/fractalmeter/engine/parse.py

"""
Parsers for measure files, generator specs and experiment specs.

Measure file (JSON):
    {"format": 1, "dim": 2, "depth": 8, "mode": "rational",
     "leaves": [[level, c_1, ..., c_dim, numerator, denominator], ...]}
Float-mode leaves carry a single mass instead: [level, c_1, ..., c_dim, mass].

Experiment spec (YAML or JSON): a mapping with a `measure` entry (a
generator mapping or {file: path}), `candidates` (a list of points or
{grid: {lo, hi, n}}) and the run parameters. Unknown keys are errors.

This module performs *structural* parsing only; leaf-level rules are
checked in validate.py.
"""

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Final, Optional

import yaml

from .experiment import ExperimentSpec, candidate_grid
from .generators import BLOCKED_RULES, KINDS, GeneratorSpec
from .model import MeasureError, Mode


# ---------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------

MEASURE_FORMAT: Final[int] = 1

GENERATOR_KEYS: Final[frozenset[str]] = frozenset(
    {"kind", "depth", "dim", "pattern", "blocked", "p", "seed", "center", "radius", "y", "start", "stop", "factors", "mode"}
)
EXPERIMENT_KEYS: Final[frozenset[str]] = frozenset(
    {
        "measure",
        "candidates",
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
        "mode",
    }
)


# ---------------------------------------------------------------------
# Exceptions
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ParseError(Exception):
    """
    Raised when a file or a command-line value is syntactically or
    structurally invalid.
    """

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


# ---------------------------------------------------------------------
# Measure files
# ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class MeasureDocument:
    """A measure file as read: header plus leaf rows (level, coords, mass)."""

    path: str
    dim: int
    depth: int
    mode: Mode
    rows: tuple[tuple[int, tuple[int, ...], Any], ...]


def parse_measure_file(path: str | Path) -> MeasureDocument:
    p = Path(path)
    data = _read_json(p)
    where = str(p)

    fmt = data.get("format", MEASURE_FORMAT)
    if fmt != MEASURE_FORMAT:
        raise ParseError(where, f"Unsupported measure format {fmt!r} (expected {MEASURE_FORMAT})")

    dim = _require_int_field(where, data, "dim")
    depth = _require_int_field(where, data, "depth")
    mode = _parse_mode(where, data.get("mode", Mode.FLOAT.value))

    raw = data.get("leaves")
    if not isinstance(raw, list):
        raise ParseError(where, "Key 'leaves' must be a list")

    width = 1 + dim + (2 if mode is Mode.RATIONAL else 1)
    rows = []
    for i, item in enumerate(raw, start=1):
        if not isinstance(item, list) or len(item) != width:
            raise ParseError(where, f"leaves[{i}] must be a list of {width} numbers")
        level, *rest = item
        coords = rest[:dim]
        if not all(_is_int(v) for v in [level, *coords]):
            raise ParseError(where, f"leaves[{i}]: level and coordinates must be integers")
        if mode is Mode.RATIONAL:
            num, den = rest[dim:]
            if not (_is_int(num) and _is_int(den)):
                raise ParseError(where, f"leaves[{i}]: numerator and denominator must be integers")
            if den == 0:
                raise ParseError(where, f"leaves[{i}]: zero denominator")
            mass: Any = Fraction(num, den)
        else:
            mass = rest[dim]
            if not isinstance(mass, (int, float)) or isinstance(mass, bool):
                raise ParseError(where, f"leaves[{i}]: mass must be a number")
            mass = float(mass)
        rows.append((int(level), tuple(int(c) for c in coords), mass))

    return MeasureDocument(path=where, dim=dim, depth=depth, mode=mode, rows=tuple(rows))


def _read_json(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(str(path), f"Cannot read file: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(str(path), f"Invalid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ParseError(str(path), "JSON root must be an object")
    return data


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _require_int_field(path: str, data: dict[str, Any], key: str) -> int:
    if key not in data:
        raise ParseError(path, f"Missing required key: {key}")
    value = data[key]
    if not _is_int(value):
        raise ParseError(path, f"Key '{key}' must be an integer")
    return value


def _parse_mode(path: str, raw: Any) -> Mode:
    try:
        return Mode(str(raw).strip().lower())
    except ValueError as e:
        allowed = ", ".join(m.value for m in Mode)
        raise ParseError(path, f"Invalid mode '{raw}' (allowed: {allowed})") from e


# ---------------------------------------------------------------------
# Generator specs
# ---------------------------------------------------------------------

def parse_generator_spec(path: str, data: Any, mode: Optional[Mode] = None) -> GeneratorSpec:
    if not isinstance(data, dict):
        raise ParseError(path, "Generator spec must be a mapping")
    unknown = set(data) - GENERATOR_KEYS
    if unknown:
        raise ParseError(path, f"Unknown generator key(s): {', '.join(sorted(unknown))}")

    kind = data.get("kind")
    if kind not in KINDS:
        raise ParseError(path, f"Invalid generator kind '{kind}' (allowed: {', '.join(KINDS)})")

    if "mode" in data:
        mode = _parse_mode(path, data["mode"])
    mode = mode or Mode.FLOAT

    kwargs: dict[str, Any] = {"kind": kind, "depth": _require_int_field(path, data, "depth"), "mode": mode}
    if "dim" in data:
        kwargs["dim"] = _require_int_field(path, data, "dim")
    if "pattern" in data:
        kwargs["pattern"] = tuple(_int_list(path, "pattern", data["pattern"]))
    if "blocked" in data:
        b = data["blocked"]
        kwargs["blocked"] = b if b in BLOCKED_RULES else tuple(_int_list(path, "blocked", b))
    for key in ("p", "radius", "y", "start", "stop"):
        if key in data:
            kwargs[key] = _number(path, key, data[key])
    if "seed" in data:
        kwargs["seed"] = _require_int_field(path, data, "seed")
    if "center" in data:
        kwargs["center"] = _point(path, "center", data["center"])
    if "factors" in data:
        factors = data["factors"]
        if not isinstance(factors, list):
            raise ParseError(path, "Key 'factors' must be a list of generator specs")
        kwargs["factors"] = tuple(parse_generator_spec(path, f, mode) for f in factors)

    try:
        return GeneratorSpec(**kwargs)
    except MeasureError as e:
        raise ParseError(path, str(e)) from e


def _int_list(path: str, key: str, value: Any) -> list[int]:
    if isinstance(value, str):
        return parse_int_list(value, where=path)
    if not isinstance(value, list) or not all(_is_int(v) for v in value):
        raise ParseError(path, f"Key '{key}' must be a list of integers")
    return list(value)


def _number(path: str, key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(path, f"Key '{key}' must be a number")
    return float(value)


def _point(path: str, key: str, value: Any) -> tuple[float, float]:
    if isinstance(value, str):
        return parse_point(value, where=path)
    if not isinstance(value, list) or len(value) != 2:
        raise ParseError(path, f"Key '{key}' must be a pair of numbers")
    return (_number(path, key, value[0]), _number(path, key, value[1]))


def parse_generator_file(path: str | Path) -> GeneratorSpec:
    """A generator spec on its own, as written by `gen --spec-out`."""
    p = Path(path)
    return parse_generator_spec(str(p), _read_yaml(p))


def _read_yaml(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(str(path), f"Cannot read file: {e}") from e
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ParseError(str(path), f"Invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ParseError(str(path), "YAML root must be a mapping/dictionary")
    return data


# ---------------------------------------------------------------------
# Experiment specs
# ---------------------------------------------------------------------

def parse_experiment_spec(path: str | Path) -> ExperimentSpec:
    p = Path(path)
    where = str(p)
    data = _read_yaml(p)

    unknown = set(data) - EXPERIMENT_KEYS
    if unknown:
        raise ParseError(where, f"Unknown key(s): {', '.join(sorted(unknown))}")

    mode = _parse_mode(where, data["mode"]) if "mode" in data else None
    measure = data.get("measure")
    if not isinstance(measure, dict):
        raise ParseError(where, "Key 'measure' must be a mapping")

    kwargs: dict[str, Any] = {"candidates": _candidates(where, data.get("candidates"))}
    if set(measure) == {"file"}:
        target = Path(str(measure["file"]))
        kwargs["measure_file"] = str(target if target.is_absolute() else p.parent / target)
    else:
        kwargs["measure"] = parse_generator_spec(where, measure, mode)

    for key in ("t", "eps", "s", "separation"):
        if key in data:
            kwargs[key] = _number(where, key, data[key])
    if data.get("frostman_c") is not None:
        kwargs["frostman_c"] = _number(where, "frostman_c", data["frostman_c"])
    for key in ("j0", "n_angles", "n_random_subsets", "annulus_level", "seed"):
        if data.get(key) is not None:
            kwargs[key] = _require_int_field(where, data, key)
    if mode is not None:
        kwargs["mode"] = mode

    try:
        return ExperimentSpec(**kwargs)
    except MeasureError as e:
        raise ParseError(where, str(e)) from e


def _candidates(path: str, raw: Any) -> tuple[tuple[float, float], ...]:
    if isinstance(raw, dict) and set(raw) == {"grid"} and isinstance(raw["grid"], dict):
        g = raw["grid"]
        if set(g) != {"lo", "hi", "n"}:
            raise ParseError(path, "candidates.grid needs exactly lo, hi and n")
        if not _is_int(g["n"]):
            raise ParseError(path, "candidates.grid.n must be an integer")
        try:
            return candidate_grid(_number(path, "lo", g["lo"]), _number(path, "hi", g["hi"]), g["n"])
        except MeasureError as e:
            raise ParseError(path, str(e)) from e
    if isinstance(raw, list) and raw:
        return tuple(_point(path, "candidates", c) for c in raw)
    raise ParseError(path, "Key 'candidates' must be a nonempty list of points or {grid: {lo, hi, n}}")


# ---------------------------------------------------------------------
# Command-line values
# ---------------------------------------------------------------------

def parse_point(text: str, where: str = "<argument>") -> tuple[float, float]:
    """'0.5,-1' -> (0.5, -1.0)"""
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise ParseError(where, f"Expected a point 'x,y', got '{text}'")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as e:
        raise ParseError(where, f"Invalid point '{text}'") from e


def parse_int_list(text: str, where: str = "<argument>") -> list[int]:
    """'0,1,3' -> [0, 1, 3]"""
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise ParseError(where, f"Expected comma-separated integers, got '{text}'") from e
