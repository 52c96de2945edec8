import json
from fractions import Fraction

import pytest

from fractalmeter.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, EXIT_USAGE, main
from fractalmeter.engine.ops import load_measure, tree_digest


@pytest.fixture
def measure_file(tmp_path):
    path = tmp_path / "uniform.json"
    assert main(["gen", "--kind", "branching", "--depth", "3", "--pattern", "0,1,2,3", "-o", str(path)]) == EXIT_OK
    return path


def test_gen_prints_path_and_digest(tmp_path, capsys):
    out = tmp_path / "m.json"
    spec = tmp_path / "m.yaml"
    code = main(
        ["--mode", "rational", "gen", "--kind", "digit", "--dim", "1", "--depth", "8", "-o", str(out), "--spec-out", str(spec)]
    )
    assert code == EXIT_OK
    path, digest = capsys.readouterr().out.strip().split("\t")
    tree = load_measure(path)
    assert tree_digest(tree) == digest
    assert len(tree.leaves) == 8

    again = tmp_path / "again.json"
    assert main(["gen", "--spec", str(spec), "-o", str(again)]) == EXIT_OK
    assert tree_digest(load_measure(again)) == digest


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--depth", "3"],
        ["gen", "--kind", "branching", "--depth", "3"],
        ["gen", "--kind", "beta", "--depth", "3", "--p", "0"],
        ["gen", "--kind", "digit", "--depth", "3", "--blocked", "odd"],
        ["gen", "--kind", "product", "--depth", "3"],
    ],
)
def test_gen_usage_errors(tmp_path, capsys, argv):
    assert main([*argv, "-o", str(tmp_path / "x.json")]) == EXIT_USAGE
    assert "Error:" in capsys.readouterr().err


def test_argparse_errors_exit_with_usage():
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == EXIT_USAGE


def test_analyze_energy(measure_file, capsys):
    assert main(["--mode", "rational", "analyze", "energy", "-m", str(measure_file), "--s", "1"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["mode"] == "rational"
    assert report["dyadic_energy"] == pytest.approx(1.5)
    assert Fraction(report["exact"]) == Fraction(3, 2)
    assert [row["j"] for row in report["rows"]] == [1, 2, 3]


def test_analyze_entropy_to_files(measure_file, tmp_path):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["analyze", "entropy", "-m", str(measure_file), "--out", str(out), "--csv", str(table)]) == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["normalized"] == pytest.approx(2.0)
    assert table.read_text(encoding="utf-8").splitlines()[0] == "m,bits,normalized,l2_bound,shifted_bits"


def test_analyze_projection_and_pins(measure_file, capsys):
    assert main(["analyze", "project", "-m", str(measure_file), "--angle", "0"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["entropy_bits"] == pytest.approx(3.0)
    assert main(["analyze", "pindist", "-m", str(measure_file), "--y", "-1,-1"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["support_distance"] == pytest.approx(2**0.5)
    assert report["bins"] > 0


def test_analyze_invalid_input(measure_file, tmp_path, capsys):
    assert main(["analyze", "pindist", "-m", str(measure_file)]) == EXIT_INVALID
    assert main(["analyze", "energy", "-m", str(tmp_path / "missing.json")]) == EXIT_INVALID
    assert main(["analyze", "energy", "-m", str(measure_file), "--s", "2"]) == EXIT_INVALID
    line = tmp_path / "line.json"
    main(["gen", "--kind", "branching", "--dim", "1", "--depth", "3", "--pattern", "0,1", "-o", str(line)])
    assert main(["analyze", "project", "-m", str(line)]) == EXIT_INVALID
    assert "Error:" in capsys.readouterr().err


def test_verify_streams_json_lines(capsys):
    assert main(["verify", "identities", "--size", "1", "--seed", "2", "--no-color"]) == EXIT_OK
    captured = capsys.readouterr()
    rows = [json.loads(line) for line in captured.out.splitlines()]
    assert rows and all(r["suite"] == "identities" and r["passed"] for r in rows)
    assert "identities: 3/3 checks passed PASS" in captured.err


def test_verify_rejects_bad_sizes():
    assert main(["verify", "identities", "--size", "tiny"]) == EXIT_INVALID


def test_exit_code_for_failed_checks(monkeypatch):
    from fractalmeter import cli
    from fractalmeter.engine.suites import CheckResult

    monkeypatch.setattr(cli, "run_suite", lambda name, size, seed: iter([CheckResult("broken", False)]))
    assert main(["verify", "pipeline"]) == EXIT_FAILED


def test_experiment_and_report(tmp_path, capsys):
    spec = tmp_path / "exp.yaml"
    spec.write_text(
        "measure: {kind: branching, depth: 6, pattern: [0, 1, 3]}\n"
        "candidates: {grid: {lo: -1.0, hi: -0.25, n: 2}}\n"
        "eps: 0.5\n"
        "n_angles: 64\n",
        encoding="utf-8",
    )
    out, table = tmp_path / "report.json", tmp_path / "scales.csv"
    assert main(["experiment", "--spec", str(spec), "-o", str(out), "--csv", str(table), "--quiet"]) == EXIT_OK
    saved = json.loads(out.read_text(encoding="utf-8"))
    assert saved["spec"]["eps"] == 0.5
    assert table.read_text(encoding="utf-8").startswith("j,m,d,squares,")
    capsys.readouterr()

    assert main(["report", str(out), "--no-color"]) == EXIT_OK
    assert "pinned-distance experiment:" in capsys.readouterr().out

    assert main(["report", str(out), "--format", "csv", "--table", "adversaries"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "bits,entropy,mass,name,span"
    assert lines[1].split(",")[3] == "A1"

    assert main(["report", str(spec)]) == EXIT_INVALID
