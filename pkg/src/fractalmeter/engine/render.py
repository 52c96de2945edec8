# src/fractalmeter/engine/render.py

"""
Rendering helpers for CLI output.

This module is responsible for:
- the experiment report view (experiment / report),
- plain column tables (per-scale rows, adversary subsets),
- the verify summary line.

It is presentation-only: it reads report dictionaries as written by
ops.write_report and never computes or writes files.
"""

from __future__ import annotations

import re
import shutil
import sys
from typing import Any, Mapping, Sequence


# ---------------------------------------------------------------------
# ANSI / terminal helpers
# ---------------------------------------------------------------------

_ANSI_RE = re.compile(r"\x1b\[[0-9;]*m")

_RESET = "\033[0m"
_DIM = "\033[90m"
_GREEN = "\033[32m"
_RED = "\033[31m"


def _supports_color() -> bool:
    """Return True if stdout is a TTY."""
    return sys.stdout.isatty()


def _visible_len(s: str) -> int:
    """Return string length without ANSI colour escapes."""
    return len(_ANSI_RE.sub("", s))


def _verdict(ok: bool, *, color: bool) -> str:
    word = "PASS" if ok else "FAIL"
    if color and _supports_color():
        return f"{_GREEN if ok else _RED}{word}{_RESET}"
    return word


def fmt(value: Any) -> str:
    """Compact cell text: 4 significant digits for floats, '-' for None."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


# ---------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------

def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]], *, prefix: str = "") -> None:
    """
    Print a left-aligned table with a dashed rule under the header.
    """
    cells = [[fmt(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], _visible_len(c))

    def line(values: Sequence[str]) -> str:
        return "  ".join(v + " " * (w - _visible_len(v)) for v, w in zip(values, widths)).rstrip()

    print(prefix + line(list(headers)))
    print(prefix + "  ".join("-" * w for w in widths))
    for row in cells:
        print(prefix + line(row))


SCALE_COLUMNS: tuple[tuple[str, str], ...] = (
    ("j", "j"),
    ("m", "m_j"),
    ("d", "d_j"),
    ("squares", "squares"),
    ("heavy", "heavy"),
    ("good", "good"),
    ("bad_mass", "bad mass"),
    ("bad_bound", "bound"),
    ("light_mass", "light"),
    ("light_holds", "light ok"),
    ("local_entropy", "local H"),
    ("local_target", "target"),
    ("direction_fail", "dir fail"),
)


# ---------------------------------------------------------------------
# Experiment report view
# ---------------------------------------------------------------------

def render_report(report: Mapping[str, Any], *, color: bool = True) -> None:
    """
    Render a saved experiment report.

    Width is capped at 100 characters.
    """
    width = min(100, shutil.get_terminal_size(fallback=(100, 24)).columns)

    def rule(ch: str = "-") -> None:
        print(ch * width)

    def cdim(s: str) -> str:
        return f"{_DIM}{s}{_RESET}" if color and _supports_color() else s

    params = report.get("params", {})
    vantage = report.get("vantage", {})
    frostman = report.get("frostman", {})

    print()
    rule("=")
    print(f"pinned-distance experiment: {_verdict(bool(report['verdict']), color=color)}")
    rule("=")
    print(
        f"t={fmt(params.get('t'))}  eps={fmt(params.get('eps'))}  s={fmt(params.get('s'))}  "
        f"delta={fmt(params.get('delta'))}  schedule={params.get('schedule')}"
    )
    print(f"vantage y={vantage.get('point')}  score={fmt(vantage.get('score'))}  admissible={fmt(params.get('vantage_admissible'))}")
    print(f"frostman: c={fmt(frostman.get('constant'))}  ok={fmt(frostman.get('ok'))}")
    print(f"A1 mass={fmt(report.get('a1_mass'))}" + (cdim("  (fallback: whole support)") if report.get("a1_fallback") else ""))
    print(
        f"worst subset: {report['worst']}  H/span={fmt(report['entropy'])}  "
        f"bits={fmt(report['entropy_bits'])}  chain bound={fmt(report['chain_bound'])} "
        f"({_verdict(bool(report.get('chain_holds')), color=color)})"
    )

    multiscale = report.get("multiscale")
    if multiscale is not None:
        print(
            f"multiscale: lhs={fmt(multiscale['lhs'])}  rhs={fmt(multiscale['rhs_sum'])}  "
            f"margin={fmt(multiscale['margin'])}  ({_verdict(bool(multiscale['holds']), color=color)})"
        )
    else:
        print(cdim("multiscale: skipped"))

    adversaries = report.get("adversaries", [])
    if adversaries:
        rule()
        render_table(
            ("subset", "mass", "bits", "span", "H/span"),
            [(a["name"], a["mass"], a.get("bits"), a.get("span"), a["entropy"]) for a in adversaries],
        )

    scales = report.get("scales", [])
    if scales:
        rule()
        render_table([h for _, h in SCALE_COLUMNS], [[row.get(k) for k, _ in SCALE_COLUMNS] for row in scales])

    rule("=")
    print(cdim(f"version {report.get('version')}  schema {report.get('schema_version')}  {report.get('timestamp', '')}"))


# ---------------------------------------------------------------------
# Verify summary
# ---------------------------------------------------------------------

def render_suite_summary(suite: str, results: Sequence[Mapping[str, Any]], *, color: bool = True) -> None:
    failed = [r["check"] for r in results if not r["passed"]]
    ok = not failed
    print(f"{suite}: {len(results) - len(failed)}/{len(results)} checks passed {_verdict(ok, color=color)}", file=sys.stderr)
    for name in failed:
        print(f"  failed: {name}", file=sys.stderr)
