import numpy as np
import pytest
from hypothesis import given, strategies as st

from ccom.metrics import (CostLedger, Timeline, check_committee_goal, check_population_goal,
                          commensurateness, majority_ok, performance_pct)


def _timeline(rows):
    tl = Timeline()
    led = CostLedger()
    for r, (good, bad, cgood, seats) in enumerate(rows):
        total = good + bad
        tl.record((r, 5.0 * r, total, good, bad, bad / total, bad / total, 0, seats, seats,
                   cgood, 1, 0, 0), led)
    return tl


def test_all_good_passes():
    assert check_population_goal(_timeline([(12, 0, 1.0, 40)] * 3))


def test_half_bad_fails_at_that_round():
    check = check_population_goal(_timeline([(12, 0, 1.0, 40), (6, 6, 1.0, 40), (12, 0, 1.0, 40)]))
    assert not check.passed and check.first_violation == 1


def test_committee_majority():
    assert majority_ok(5, 4)
    assert not majority_ok(4, 4)
    tl = _timeline([(10, 0, 0.5, 40)])
    assert not check_committee_goal(tl, n0=1000)
    assert check_committee_goal(_timeline([(10, 0, 5 / 9, 40)]), n0=1000)


def test_committee_size_bounds():
    assert not check_committee_goal(_timeline([(10, 0, 1.0, 2)]), n0=1000)


@pytest.mark.parametrize("ratio,pct", [(1.0, 0.0), (0.161, 83.9), (0.001, 99.9)])
def test_performance_pct(ratio, pct):
    assert performance_pct(ratio * 1000, 1000) == pytest.approx(pct)


def test_fit_exact_line():
    fit = commensurateness([1, 2, 4, 8, 16], [3, 5, 9, 17, 33])
    assert fit.slope == pytest.approx(2) and fit.intercept == pytest.approx(1) and fit.r2 == pytest.approx(1)


@given(st.lists(st.floats(0, 1e6), min_size=3, max_size=20), st.floats(0.1, 10), st.floats(-5, 5))
def test_fit_recovers_noiseless_lines(x, a, b):
    x = np.asarray(x)
    if np.ptp(x) < 1e-3:
        return
    fit = commensurateness(x, a * x + b)
    assert fit.slope == pytest.approx(a, rel=1e-6)
    assert fit.r2 == pytest.approx(1.0, abs=1e-9)
