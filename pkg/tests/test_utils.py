import os
import threading

import numpy as np

from fractalmeter.utils.parallel import ENV_THREADS, ordered_map, thread_count
from fractalmeter.utils.rng import StableRng


def test_rng_streams_are_reproducible():
    assert np.array_equal(StableRng(3).raw(8), StableRng(3).raw(8))
    assert not np.array_equal(StableRng(3).raw(8), StableRng(4).raw(8))


def test_rng_draws():
    rng = StableRng(11)
    assert rng.survive(1.0, 5).all()
    assert not rng.survive(0.0, 5).any()
    u = rng.uniform(1000)
    assert ((u >= 0.0) & (u < 1.0)).all()
    assert set(rng.choice(np.array([0.0, 1.0]), 50).tolist()) == {1}
    picks = rng.choice(np.array([0.25, 1.0]), 2000)
    assert 0.15 < float((picks == 0).mean()) < 0.35


def test_full_survival_keeps_the_stream_aligned():
    a, b = StableRng(5), StableRng(5)
    a.survive(1.0, 4)
    b.raw(4)
    assert np.array_equal(a.raw(3), b.raw(3))


def test_thread_count(monkeypatch, caplog):
    monkeypatch.setenv(ENV_THREADS, "3")
    assert thread_count() == 3
    monkeypatch.setenv(ENV_THREADS, "0")
    assert thread_count() == 1
    monkeypatch.setenv(ENV_THREADS, "many")
    assert thread_count() == (os.cpu_count() or 1)
    assert "not an integer" in caplog.text
    monkeypatch.delenv(ENV_THREADS)
    assert thread_count() == (os.cpu_count() or 1)


def test_ordered_map_keeps_input_order(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, "4")
    seen = set()

    def work(x):
        seen.add(threading.get_ident())
        return x * x

    assert ordered_map(work, range(50)) == [x * x for x in range(50)]
    assert ordered_map(work, []) == []


def test_single_thread_runs_inline():
    seen = []
    ordered_map(lambda x: seen.append(threading.get_ident()), range(5))
    assert set(seen) == {threading.get_ident()}
