from pathlib import Path

import pytest
import yaml

from fractalmeter.engine.generators import branching_measure, circle_measure
from fractalmeter.engine.model import Mode


BASELINES = Path(__file__).parent / "data" / "regressions.yaml"


class Baselines:
    """
    Recorded values of deterministic runs, keyed by name.

    A name with no recorded value is written to the file and the calling
    test is skipped; the next run compares against it.
    """

    def __init__(self, path: Path) -> None:
        self.path = path
        self.values = yaml.safe_load(path.read_text(encoding="utf-8")) or {}

    def check(self, name, value, rel=1e-9):
        if name not in self.values:
            self.values[name] = value
            self.path.write_text(yaml.safe_dump(self.values, sort_keys=True), encoding="utf-8")
            pytest.skip(f"recorded regression value {name}")
        recorded = self.values[name]
        if isinstance(value, (str, bool)):
            assert value == recorded
        else:
            assert value == pytest.approx(recorded, rel=rel)


@pytest.fixture
def baselines():
    return Baselines(BASELINES)


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setenv("FRACTALMETER_THREADS", "1")


@pytest.fixture
def uniform():
    return branching_measure([0, 1, 2, 3], 4)


@pytest.fixture
def uniform_exact():
    return branching_measure([0, 1, 2, 3], 3, mode=Mode.RATIONAL)


@pytest.fixture
def three_branch():
    return branching_measure([0, 1, 3], 6)


@pytest.fixture
def three_branch_exact():
    return branching_measure([0, 1, 3], 4, mode=Mode.RATIONAL)


@pytest.fixture
def circle():
    return circle_measure((0.5, 0.5), 0.3, 8)
