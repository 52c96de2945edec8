# src/fractalmeter/cli.py

"""
Command-line interface for fractalmeter.

This module:
- defines argument parsing and subcommands,
- delegates measure construction, analysis and storage to engine modules,
- maps errors to exit codes.

Exit codes: 0 success, 2 usage, 3 invalid input or domain error,
4 failed verification.
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import Any, Callable

from fractalmeter import __version__
from fractalmeter.engine.energy import correlation_profile, dyadic_energy, euclidean_energy, l2_norm_sq
from fractalmeter.engine.entropy import (
    entropy_lower_bound_from_l2,
    normalized_entropy,
    partition_entropy,
    shifted_partition_entropy,
)
from fractalmeter.engine.experiment import run_spec
from fractalmeter.engine.generators import BLOCKED_RULES, KINDS, GeneratorSpec, expected_dimension, generate
from fractalmeter.engine.measure import discretize, with_mode
from fractalmeter.engine.model import Direction, GeneratorError, Grid1D, MeasureError, MeasureTree, Mode, ShapeMismatchError
from fractalmeter.engine.ops import (
    csv_text,
    dumps_line,
    dumps_report,
    load_measure,
    load_report,
    load_spec_measure,
    tree_digest,
    write_csv,
    write_measure,
    write_report,
    write_spec,
)
from fractalmeter.engine.parse import (
    ParseError,
    parse_experiment_spec,
    parse_generator_file,
    parse_int_list,
    parse_point,
)
from fractalmeter.engine.pinned import pinned_tree, support_distance
from fractalmeter.engine.projection import (
    DEFAULT_SUBDIV,
    angle_sweep,
    marstrand_integral,
    project_tree,
    sobolev_norm_sq,
)
from fractalmeter.engine.render import render_report, render_suite_summary
from fractalmeter.engine.suites import SIZES, SUITES, run_suite
from fractalmeter.engine.validate import ValidationError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_FAILED = 4

KIND_ALIASES: dict[str, str] = {"beta": "beta-model", "digit": "digit-restricted"}


# ---------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractalmeter")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--mode",
        choices=[m.value for m in Mode],
        default=None,
        help="Scalar mode: rational (exact) or float (default: float, or the file's mode)",
    )
    parser.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error"],
        default="warning",
        help="Logging level (default: warning)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    # ------------------------------------------------------------------
    # gen
    # ------------------------------------------------------------------

    p_gen = sub.add_parser("gen", help="Generate a measure file")
    p_gen.add_argument("--kind", choices=sorted(set(KINDS) | set(KIND_ALIASES)), help="Generator kind")
    p_gen.add_argument("--spec", type=str, help="Generator spec file (YAML/JSON) instead of flags")
    p_gen.add_argument("--depth", "--level", dest="depth", type=int, help="Tree depth (polyline level for curves)")
    p_gen.add_argument("--dim", type=int, default=2, help="Dimension 1 or 2 (default: 2)")
    p_gen.add_argument("--pattern", type=str, help="Kept children, e.g. 0,1,3")
    p_gen.add_argument("--blocked", type=str, default="squares", help="squares | never | always | comma list of levels")
    p_gen.add_argument("--p", type=float, default=1.0, help="Beta-model survival probability")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--center", type=str, default="0.5,0.5", help="Circle center x,y")
    p_gen.add_argument("--radius", type=float, default=0.25)
    p_gen.add_argument("--y", type=float, default=0.5, help="Height of a line measure")
    p_gen.add_argument("--start", type=float, default=0.0)
    p_gen.add_argument("--stop", type=float, default=1.0)
    p_gen.add_argument("-o", "--out", type=str, required=True, help="Output measure file")
    p_gen.add_argument("--spec-out", type=str, help="Also write the generator spec as YAML")
    p_gen.set_defaults(func=cmd_gen)

    # ------------------------------------------------------------------
    # analyze
    # ------------------------------------------------------------------

    p_an = sub.add_parser("analyze", help="Energy, entropy, projection or pinned-distance analysis")
    p_an.add_argument("what", choices=["energy", "entropy", "project", "pindist"])
    p_an.add_argument("-m", "--measure", type=str, required=True, help="Measure file")
    p_an.add_argument("--s", type=float, default=1.0, help="Energy exponent (default: 1.0)")
    p_an.add_argument("--euclidean", action="store_true", help="Also compute the Riesz energy")
    p_an.add_argument("--level", type=int, help="Partition / binning level (default: tree depth)")
    p_an.add_argument("--angle", type=float, default=0.0, help="Projection angle in radians")
    p_an.add_argument("--n-angles", type=int, help="Sweep this many angles instead of one")
    p_an.add_argument("--gamma", type=float, default=0.25, help="Sobolev index in (-1/2, 1/2)")
    p_an.add_argument("--subdiv", type=int, help="Sub-atom refinement of each leaf")
    p_an.add_argument("--y", type=str, help="Pin x,y for pindist")
    p_an.add_argument("--out", type=str, help="Write the JSON report here instead of stdout")
    p_an.add_argument("--csv", type=str, help="Also write the table rows as CSV")
    p_an.set_defaults(func=cmd_analyze)

    # ------------------------------------------------------------------
    # verify
    # ------------------------------------------------------------------

    p_ver = sub.add_parser("verify", help="Run a verification suite")
    p_ver.add_argument("suite", choices=[*SUITES, "all"])
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--size", type=str, default="small", help=f"{' | '.join(SIZES)} | an integer")
    p_ver.add_argument("--no-color", action="store_true", help="Disable coloured output")
    p_ver.set_defaults(func=cmd_verify)

    # ------------------------------------------------------------------
    # experiment / report
    # ------------------------------------------------------------------

    p_exp = sub.add_parser("experiment", help="Run a pinned-distance experiment from a spec file")
    p_exp.add_argument("--spec", type=str, required=True, help="Experiment spec (YAML/JSON)")
    p_exp.add_argument("-o", "--out", type=str, required=True, help="Output report (JSON)")
    p_exp.add_argument("--csv", type=str, help="Also write the per-scale table as CSV")
    p_exp.add_argument("--quiet", action="store_true", help="Do not print the report view")
    p_exp.add_argument("--no-color", action="store_true", help="Disable coloured output")
    p_exp.set_defaults(func=cmd_experiment)

    p_rep = sub.add_parser("report", help="Render a saved experiment report")
    p_rep.add_argument("report", type=str, help="Report file (JSON)")
    p_rep.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p_rep.add_argument("--table", choices=["scales", "adversaries"], default="scales", help="Table for --format csv")
    p_rep.add_argument("--no-color", action="store_true", help="Disable coloured output")
    p_rep.set_defaults(func=cmd_report)

    return parser


# ---------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------

def _gen_spec(args: argparse.Namespace) -> GeneratorSpec:
    mode = Mode(args.mode) if args.mode else None
    if args.spec:
        spec = parse_generator_file(args.spec)
        return spec if mode is None else spec.in_mode(mode)

    if not args.kind:
        raise ParseError("<arguments>", "one of --kind and --spec is required")
    if args.depth is None:
        raise ParseError("<arguments>", "--depth is required")
    kind = KIND_ALIASES.get(args.kind, args.kind)
    if kind == "product":
        raise ParseError("<arguments>", "products are built from a --spec file")
    if kind == "branching" and not args.pattern:
        raise ParseError("<arguments>", "--pattern is required for branching measures")

    blocked: Any = args.blocked
    if blocked not in BLOCKED_RULES:
        blocked = tuple(parse_int_list(blocked, where="--blocked"))
    return GeneratorSpec(
        kind=kind,
        depth=args.depth,
        dim=args.dim,
        pattern=tuple(parse_int_list(args.pattern, where="--pattern")) if args.pattern else (),
        blocked=blocked,
        p=args.p,
        seed=args.seed,
        center=parse_point(args.center, where="--center"),
        radius=args.radius,
        y=args.y,
        start=args.start,
        stop=args.stop,
        mode=mode or Mode.FLOAT,
    )


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        spec = _gen_spec(args)
        tree = generate(spec)
    except (ParseError, GeneratorError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    out = write_measure(tree, args.out)
    if args.spec_out:
        write_spec(spec.to_dict(), args.spec_out)

    logger.info("wrote %s (%d leaves, expected dimension %.4g)", out, len(tree.leaves), expected_dimension(spec))
    print(f"{out}\t{tree_digest(tree)}")
    return EXIT_OK


def _load(args: argparse.Namespace) -> MeasureTree:
    tree = load_measure(args.measure)
    return with_mode(tree, Mode(args.mode)) if args.mode else tree


def _line_rows(line: Grid1D) -> list[dict[str, Any]]:
    return [
        {"index": line.lo + i, "center": float(c), "mass": m}
        for i, (c, m) in enumerate(zip(line.centers(), line.masses))
        if m != 0
    ]


def _require_planar(tree: MeasureTree, what: str) -> None:
    if tree.dim != 2:
        raise ShapeMismatchError(f"{what} needs a planar measure")


def _analyze_energy(tree: MeasureTree, args: argparse.Namespace) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    value = dyadic_energy(tree, args.s)
    profile = correlation_profile(tree, args.s)
    rows = [{"j": j, "sum": profile.sums[j], "term": term} for j, term in profile.rows()]
    result: dict[str, Any] = {"dyadic_energy": float(value), "s": args.s}
    if tree.mode is Mode.RATIONAL:
        result["exact"] = str(value)
    if args.euclidean:
        e = euclidean_energy(tree, args.s, 1 if args.subdiv is None else args.subdiv)
        result["euclidean"] = {"total": e.total, "pairs": e.pairs, "diagonal": e.diagonal, "subdiv": e.subdiv}
    return result, rows


def _analyze_entropy(tree: MeasureTree, args: argparse.Namespace) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    level = tree.depth if args.level is None else args.level
    rows = []
    for m in range(1, level + 1):
        grid = discretize(tree, m)
        rows.append(
            {
                "m": m,
                "bits": partition_entropy(grid).bits,
                "normalized": normalized_entropy(grid),
                "l2_bound": entropy_lower_bound_from_l2(grid),
                "shifted_bits": shifted_partition_entropy(tree, m).bits if m < tree.depth else None,
            }
        )
    result = {"level": level, "normalized": rows[-1]["normalized"] if rows else None}
    return result, rows


def _analyze_project(tree: MeasureTree, args: argparse.Namespace) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    _require_planar(tree, "projection")
    subdiv = DEFAULT_SUBDIV if args.subdiv is None else args.subdiv
    if args.n_angles:
        grid = discretize(tree, tree.depth)
        rows = [{"angle": r.angle, "sobolev": r.sobolev, "l2": r.l2} for r in angle_sweep(grid, args.gamma, args.n_angles, subdiv)]
        result: dict[str, Any] = {"gamma": args.gamma, "n_angles": args.n_angles}
        if args.n_angles >= 16:
            mi = marstrand_integral(tree, args.gamma, args.n_angles, subdiv)
            result["marstrand"] = {"lhs": mi.lhs, "rhs": mi.rhs, "ratio": mi.ratio, "evaluations": mi.evaluations}
        return result, rows

    level = tree.depth if args.level is None else args.level
    line = project_tree(tree, Direction.of(args.angle), level, subdiv)
    result = {
        "angle": args.angle,
        "level": level,
        "l2": float(l2_norm_sq(line)),
        "entropy_bits": partition_entropy(line).bits,
        "sobolev": sobolev_norm_sq(line, args.gamma),
        "gamma": args.gamma,
    }
    return result, _line_rows(line)


def _analyze_pindist(tree: MeasureTree, args: argparse.Namespace) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    _require_planar(tree, "pinned distances")
    if not args.y:
        raise ParseError("<arguments>", "--y is required for pindist")
    y = parse_point(args.y, where="--y")
    level = tree.depth if args.level is None else args.level
    line = pinned_tree(tree, y, level, 0 if args.subdiv is None else args.subdiv)
    bits = partition_entropy(line).bits
    result = {
        "y": list(y),
        "level": level,
        "support_distance": support_distance(discretize(tree, tree.depth), y),
        "bins": int(sum(1 for m in line.masses if m != 0)),
        "entropy_bits": bits,
        "normalized": bits / level if level else None,
    }
    return result, _line_rows(line)


ANALYSES: dict[str, Callable[[MeasureTree, argparse.Namespace], tuple[dict[str, Any], list[dict[str, Any]]]]] = {
    "energy": _analyze_energy,
    "entropy": _analyze_entropy,
    "project": _analyze_project,
    "pindist": _analyze_pindist,
}


def cmd_analyze(args: argparse.Namespace) -> int:
    tree = _load(args)
    result, rows = ANALYSES[args.what](tree, args)
    report = {
        "what": args.what,
        "measure": str(args.measure),
        "digest": tree_digest(tree),
        "dim": tree.dim,
        "depth": tree.depth,
        "mode": tree.mode.value,
        "version": __version__,
        **result,
        "rows": rows,
    }

    if args.out:
        write_report(report, args.out)
    else:
        sys.stdout.write(dumps_report(report))
    if args.csv:
        write_csv(rows, args.csv)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        results = []
        for check in run_suite(name, args.size, args.seed):
            d = {"suite": name, **check.to_dict()}
            print(dumps_line(d), flush=True)
            results.append(d)
        render_suite_summary(name, results, color=not args.no_color)
        ok = ok and all(r["passed"] for r in results)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_experiment(args: argparse.Namespace) -> int:
    spec = parse_experiment_spec(args.spec)
    if args.mode:
        spec = replace(spec, mode=Mode(args.mode))
    report = run_spec(spec, load_spec_measure(spec)).to_dict()
    write_report(report, args.out)
    if args.csv:
        write_csv(report["scales"], args.csv)
    if not args.quiet:
        render_report(report, color=not args.no_color)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    if args.format == "json":
        sys.stdout.write(dumps_report(report))
    elif args.format == "csv":
        sys.stdout.write(csv_text(report[args.table]))
    else:
        render_report(report, color=not args.no_color)
    return EXIT_OK


# ---------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    func = getattr(args, "func", None)
    if func is None:
        parser.print_help()
        return EXIT_USAGE

    try:
        return func(args)
    except (ParseError, ValidationError, MeasureError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
