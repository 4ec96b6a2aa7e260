import math
from pathlib import Path

import numpy as np
import pytest

from ccom.churn import (DEPART, JOIN, ChurnEvent, DanglingDepart, DuplicateJoin, OrderViolation,
                        ParseError, SessionModel, SKYPE, enforce_rate_cap, load_trace,
                        rate_cap_violations, weibull_sessions, write_trace)


def test_exponential_sessions():
    m = SessionModel(1.0, 100.0, unit_seconds=1.0)
    x = np.random.default_rng(0).weibull(m.shape, 10_000) * m.scale_seconds
    assert x.mean() == pytest.approx(100, rel=0.05)


def test_debian_mean():
    m = SessionModel(0.38, 42.2)
    oracle = 42.2 * math.gamma(1 + 1 / 0.38)
    assert oracle == pytest.approx(165, rel=0.02)
    assert m.mean_seconds / 60 == pytest.approx(oracle)
    x = np.random.default_rng(1).weibull(0.38, 200_000) * m.scale
    assert x.mean() == pytest.approx(oracle, rel=0.10)


def test_skype_median():
    assert SKYPE.scale_seconds == pytest.approx(5.5 * 3600 / math.log(2) ** (1 / 0.64))
    x = np.random.default_rng(2).weibull(0.64, 50_000) * SKYPE.scale_seconds
    assert np.median(x) == pytest.approx(5.5 * 3600, rel=0.05)


def test_generated_schedule_is_consistent():
    sch = weibull_sessions(SessionModel(0.5, 1.0), 50, 5000, np.random.default_rng(0))
    live = set(sch.initial_keys)
    last = 0.0
    for e in sch.events:
        assert e.time >= last
        last = e.time
        if e.kind == JOIN:
            assert e.key not in live
            live.add(e.key)
        else:
            live.remove(e.key)


def test_min_population_floor():
    sch = weibull_sessions(SessionModel(0.5, 1.0), 30, 5000, np.random.default_rng(1), min_population=25)
    n = 30
    for e in sch.events:
        n += 1 if e.kind == JOIN else -1
        assert n >= 25


def test_bad_rejoins_retire_their_slot():
    sch = weibull_sessions(SessionModel(1.0, 1.0, 1.0), 100, 1e9, np.random.default_rng(2),
                           p_bad=0.5, max_joins=150)
    joins = [e for e in sch.events if e.kind == JOIN]
    assert len(joins) == 150
    bad = {e.key for e in joins if not e.good}
    assert not any(e.kind == DEPART and e.key in bad for e in sch.events)


def test_trace_roundtrip(tmp_path: Path):
    events = [ChurnEvent(1.0, JOIN, 5), ChurnEvent(2.5, DEPART, 5)]
    path = tmp_path / "t.txt"
    write_trace(events, path, initial_keys=[1, 2])
    got = load_trace(path)
    assert len(got) == 4
    assert [e.kind for e in got] == [JOIN, JOIN, JOIN, DEPART]


def test_three_line_trace(tmp_path: Path):
    path = tmp_path / "t.txt"
    path.write_text("0,J,1\n1,J,2\n2,D,1\n")
    assert len(load_trace(path)) == 3


@pytest.mark.parametrize("text,err", [
    ("0,D,1\n", DanglingDepart),
    ("5,J,1\n3,J,2\n", OrderViolation),
    ("0,X,1\n", ParseError),
    ("0,J,1\n1,J,1\n", DuplicateJoin),
])
def test_trace_errors(tmp_path: Path, text, err):
    path = tmp_path / "t.txt"
    path.write_text(text)
    with pytest.raises(err) as exc:
        load_trace(path)
    assert exc.value.line >= 1


def test_rate_cap_defers_overflow():
    # epsilon0 * G = 0.05 * 100 = 5 per round
    events = [ChurnEvent(0.1 * i, JOIN, i + 1000) for i in range(7)]
    out, rep = enforce_rate_cap(events, 0.05, 5.0, 100)
    assert rep.shifted == 2
    assert sum(1 for e in out if e.time < 5.0) == 5


def test_rate_cap_identity_when_under():
    events = [ChurnEvent(5.0 * i, JOIN, i + 1000) for i in range(7)]
    out, rep = enforce_rate_cap(events, 0.05, 5.0, 100)
    assert out == events and rep.shifted == 0


def test_concentrated_trace_satisfies_cap_afterwards():
    rng = np.random.default_rng(0)
    events = sorted((ChurnEvent(float(t), JOIN, i + 1000) for i, t in
                     enumerate(rng.uniform(0, 3, 400))), key=lambda e: e.time)
    assert rate_cap_violations(events, 0.04, 5.0, 200)
    out, _ = enforce_rate_cap(events, 0.04, 5.0, 200)
    assert rate_cap_violations(out, 0.04, 5.0, 200) == []
