import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccom.puzzles import (Exhausted, InvalidReason, PuzzleBinding, PuzzleParams, PuzzleSolution,
                          analytic_batch_cost, analytic_solve_cost, encode, keyed_hash, oracle_hash,
                          solve_puzzle, verify_solution)

SMALL = PuzzleParams(mu=2**10)


def test_oracle_hash_is_deterministic():
    assert oracle_hash(b"abc") == oracle_hash(b"abc")
    assert oracle_hash(b"abc") != oracle_hash(b"abd")


def test_oracle_hash_is_uniform():
    vals = np.array([oracle_hash(i.to_bytes(8, "big")) for i in range(100_000)])
    assert abs(vals.mean() - 0.5) < 0.01
    assert abs((vals <= 0.1).mean() - 0.1) < 0.01


def test_keyed_hash_depends_on_key():
    assert keyed_hash(b"k1", b"x") != keyed_hash(b"k2", b"x")
    assert 0.0 <= keyed_hash(b"k1", b"x") < 1.0


def test_params_for_mu_1024():
    assert SMALL.ell == 10
    assert SMALL.theta == pytest.approx(10 / (0.9 * 1024))
    assert SMALL.expected_evals == pytest.approx(0.9 * 1024)


def test_binding_requires_exactly_one_source():
    with pytest.raises(ValueError):
        PuzzleBinding(key=1)
    with pytest.raises(ValueError):
        PuzzleBinding(key=1, timestamp=3, seed=b"r")


def test_encoding_separates_entrance_and_purge():
    a = encode(PuzzleBinding.entrance(1, 5), 7)
    b = encode(PuzzleBinding.purge(1, b"\x00" * 8), 7)
    assert a != b


def test_mean_solving_cost_near_expectation():
    rng = np.random.default_rng(3)
    spent = [solve_puzzle(SMALL, PuzzleBinding.entrance(k, 0), 10**9, rng=rng).hash_evals_spent
             for k in range(200)]
    assert np.mean(spent) == pytest.approx(0.9 * 1024, rel=0.05 * 2)  # 200 runs: sd of mean ~2.2%


def test_one_evaluation_is_not_enough():
    with pytest.raises(Exhausted) as exc:
        solve_puzzle(SMALL, PuzzleBinding.entrance(1, 0), 1, start=0)
    assert exc.value.spent == 1


def test_same_search_order_gives_same_solution():
    b = PuzzleBinding.entrance(9, 4)
    assert solve_puzzle(SMALL, b, 10**6, start=123) == solve_puzzle(SMALL, b, 10**6, start=123)


def test_solution_verifies_and_costs_ell():
    b = PuzzleBinding.entrance(5, 10)
    sol = solve_puzzle(SMALL, b, 10**6, start=0)
    v = verify_solution(SMALL, sol, b, now=11)
    assert v and v.hash_evals == SMALL.ell


def _find_nonces(params, binding, wanted):
    """Nonces with hash at most params.theta, found by brute force."""
    out, n = [], 0
    while len(out) < wanted:
        if oracle_hash(encode(binding, n)) <= params.theta:
            out.append(n)
        n += 1
    return out


def test_threshold_rejection():
    p = PuzzleParams(mu=4, big_c=1.0)  # ell = 2
    b = PuzzleBinding.entrance(1, 0)
    good = _find_nonces(p, b, 2)
    assert verify_solution(p, PuzzleSolution(b, tuple(good), 0), b)
    n = 0
    while oracle_hash(encode(b, n)) <= p.theta:
        n += 1
    bad = PuzzleSolution(b, (good[0], n), 0)
    assert verify_solution(p, bad, b).reason is InvalidReason.ABOVE_THRESHOLD


def test_solution_cannot_be_claimed_by_another_key():
    b = PuzzleBinding.entrance(1, 0)
    sol = solve_puzzle(SMALL, b, 10**6, start=0)
    assert verify_solution(SMALL, sol, PuzzleBinding.entrance(2, 0)).reason is InvalidReason.WRONG_BINDING


def test_precomputed_purge_solution_fails_against_fresh_seed():
    old = PuzzleBinding.purge(1, b"old-seed")
    sol = solve_puzzle(SMALL, old, 10**6, start=0)
    assert verify_solution(SMALL, sol, PuzzleBinding.purge(1, b"new-seed")).reason is InvalidReason.WRONG_BINDING


def test_stale_timestamp():
    b = PuzzleBinding.entrance(1, 0)
    sol = solve_puzzle(SMALL, b, 10**6, start=0)
    assert verify_solution(SMALL, sol, b, now=10, margin=2).reason is InvalidReason.STALE_TIMESTAMP


def test_wrong_count():
    b = PuzzleBinding.entrance(1, 0)
    sol = solve_puzzle(SMALL, b, 10**6, start=0)
    short = PuzzleSolution(b, sol.nonces[:-1], 0)
    assert verify_solution(SMALL, short, b).reason is InvalidReason.WRONG_COUNT


def test_analytic_mean_for_two_successes_at_half():
    p = PuzzleParams(mu=4, delta=0.1, big_c=0.9)  # ell = ceil(1.8) = 2, theta = 1.8/3.6
    assert p.ell == 2 and p.theta == pytest.approx(0.5)
    draws = analytic_solve_cost(p, np.random.default_rng(0), size=10_000)
    assert np.mean(draws) == pytest.approx(4.0, rel=0.02)


def test_analytic_tail_within_chernoff_bound():
    # ell = 10, theta ~ 0.01: Pr(|X - E| >= E/2) <= 2 exp(-0.25 * 10 / 3)
    p = PuzzleParams(mu=1111, delta=0.1, big_c=1.0)
    x = analytic_solve_cost(p, np.random.default_rng(1), size=100_000)
    e = p.expected_evals
    assert np.mean(np.abs(x - e) >= 0.5 * e) <= 2 * math.exp(-0.25 * p.ell / 3)


def test_certain_success_costs_exactly_ell():
    p = PuzzleParams(mu=2, delta=0.1, big_c=1.8)  # theta = 1.8 / (0.9 * 2)
    assert p.theta == pytest.approx(1.0)
    assert np.all(analytic_solve_cost(p, np.random.default_rng(0), size=50) == p.ell)
    assert analytic_batch_cost(p, np.random.default_rng(0), 7) == 7 * p.ell


def test_batch_cost_matches_sum_in_distribution():
    rng = np.random.default_rng(5)
    batch = [analytic_batch_cost(SMALL, rng, 20) for _ in range(2000)]
    assert np.mean(batch) == pytest.approx(20 * SMALL.expected_evals, rel=0.01)


@settings(max_examples=40, deadline=None)
@given(key=st.integers(1, 2**40), stamp=st.integers(0, 10**6), start=st.integers(0, 2**40))
def test_solved_puzzles_always_verify(key, stamp, start):
    p = PuzzleParams(mu=64)
    b = PuzzleBinding.entrance(key, stamp)
    sol = solve_puzzle(p, b, 10**6, start=start)
    assert verify_solution(p, sol, b, now=stamp)
    assert sol.hash_evals_spent >= p.ell
