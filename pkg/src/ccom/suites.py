"""Named experiment designs shared by ``scripts/`` and the acceptance tests.

Each function runs one design over a list of seeds and returns plain
numbers; pass/fail thresholds live with the callers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .adversary import BurstAttack, SteadyJoin
from .ccom_engine import CCom, ProtocolParams
from .churn import DEBIAN, ChurnSchedule, SessionModel, enforce_rate_cap, weibull_sessions
from .eccom_engine import ECCom
from .identity_net import effective_alpha
from .metrics import commensurateness, performance_pct
from .puzzles import PuzzleBinding, PuzzleParams, analytic_solve_cost, solve_puzzle
from .sybilcontrol import SybilControl, SybilControlParams

WEEK_S = 604_970.0
FAST_CHURN = SessionModel.from_mean(0.38, 10.0, unit_seconds=1.0)


def schedule(model: SessionModel, n_ids: int, churn_seed, p: ProtocolParams, *,
             horizon_s: float = WEEK_S, min_population: int = 0, max_events=None,
             max_joins=None, p_bad: float = 0.0) -> ChurnSchedule:
    rng = np.random.default_rng(churn_seed)
    sch = weibull_sessions(model, n_ids, horizon_s, rng, min_population=min_population,
                           max_events=max_events, max_joins=max_joins, p_bad=p_bad)
    sch.events, _ = enforce_rate_cap(sch.events, p.epsilon0, p.round_seconds, len(sch.initial_keys))
    return sch


def rounds_through(sch: ChurnSchedule, round_seconds: float) -> int:
    return math.floor(sch.events[-1].time / round_seconds) + 1 if sch.events else 1


# ---- population and committee goals under a burst attack -------------
@dataclass
class BurstRun:
    seed: int
    max_bad_fraction: float
    max_post_purge_bad_fraction: float
    epochs: int
    all_epochs_majority: bool
    share_epochs_seven_tenths: float
    mean_committee_size: float
    mean_seats: float
    seconds: float = 0.0


def burst_run(seed: int, n0: int = 1000, seat_grab: bool = False, events: int = 100_000,
              horizon_s: float = WEEK_S) -> BurstRun:
    p = ProtocolParams(n0=n0)
    eng = CCom(p, BurstAttack(t_total=horizon_s, seat_grab=seat_grab), seed=seed)
    sch = schedule(DEBIAN, int(n0 * 1.1), eng.churn_seed, p, horizon_s=horizon_s,
                   min_population=n0, max_events=events)
    eng.record_timeline = False
    t0 = time.perf_counter()
    eng.run(sch, math.floor(horizon_s / p.round_seconds) + 1)
    ep = eng.epochs
    frac = np.array([e.committee_good_fraction for e in ep]) if ep else np.ones(1)
    majority = all(e.committee_good * 2 > e.committee_size for e in ep) and eng.committee_failures == 0
    return BurstRun(seed, eng.max_bad_fraction, eng.max_post_purge_bad_fraction, len(ep),
                    majority, float((frac >= 0.7).mean()),
                    float(np.mean([e.committee_size for e in ep])) if ep else 0.0,
                    float(np.mean([e.committee_seats for e in ep])) if ep else 0.0,
                    time.perf_counter() - t0)


def committee_size(seed: int, n0: int, rounds: int = 3000) -> float:
    """Mean committee size over the epochs of a short no-attack run."""
    p = ProtocolParams(n0=n0)
    eng = CCom(p, seed=seed)
    sch = schedule(DEBIAN, int(n0 * 1.1), eng.churn_seed, p, horizon_s=rounds * p.round_seconds,
                   min_population=n0)
    eng.record_timeline = False
    eng.run(sch, rounds)
    sizes = [e.committee_size for e in eng.epochs] or [len(eng.committee)]
    return float(np.mean(sizes))


# ---- cost commensurateness ------------------------------------------
@dataclass
class CostPoint:
    seed: int
    multiplier: float
    good_compute: float
    good_bandwidth: float
    adv_compute: float
    adv_bandwidth: float
    g_new: int


def cost_point(seed: int, multiplier: float, n0: int = 1000, rounds: int = 20_000,
               rate: float = 0.5) -> CostPoint:
    p = ProtocolParams(n0=n0)
    eng = CCom(p, SteadyJoin(rate=rate, multiplier=multiplier), seed=seed)
    sch = schedule(DEBIAN, int(n0 * 1.1), eng.churn_seed, p, horizon_s=rounds * p.round_seconds,
                   min_population=n0)
    eng.record_timeline = False
    eng.run(sch, rounds)
    led = eng.ledger
    return CostPoint(seed, multiplier, led.good_compute, led.good_bandwidth, led.adv_compute,
                     led.adv_bandwidth, led.g_new)


def cost_fits(points: list[CostPoint]):
    """(compute fit, bandwidth fit) of good cost against adversary cost + g_new."""
    x_c = [q.adv_compute + q.g_new for q in points]
    x_b = [q.adv_bandwidth + q.g_new for q in points]
    return (commensurateness(x_c, [q.good_compute for q in points]),
            commensurateness(x_b, [q.good_bandwidth for q in points]))


# ---- ECCom ------------------------------------------------------------
@dataclass
class EccomRun:
    seed: int
    epochs: int
    soundness_violations: int   # epochs whose churn passed 1/3 before the trigger
    liveness_violations: int    # triggers that fired below 1/6 churn
    max_churn: float
    min_churn_at_trigger: float
    eccom_compute: float
    ccom_compute: float

    @property
    def bounds_hold(self) -> bool:
        return self.soundness_violations == 0 and self.liveness_violations == 0


def eccom_run(seed: int, n0: int = 10_000, sample_c: float = 8.0, events: int = 100_000) -> EccomRun:
    p = ProtocolParams(n0=n0, sample_c=sample_c)
    costs = {}
    for cls in (CCom, ECCom):
        eng = cls(p, seed=seed)
        sch = schedule(DEBIAN, int(n0 * 1.1), eng.churn_seed, p, horizon_s=1e12,
                       min_population=n0, max_events=events)
        eng.record_timeline = False
        eng.run(sch, rounds_through(sch, p.round_seconds))
        costs[cls] = eng
    ec = costs[ECCom]
    ep = ec.epochs
    # one ID of slack: a churn count is an integer over |S_old|
    sound = sum(1 for e in ep if e.max_true_churn > 1 / 3 + 1 / max(e.s_old_size, 1))
    live = sum(1 for e in ep if e.true_churn_at_trigger < 1 / 6)
    return EccomRun(seed, len(ep), sound, live, max((e.max_true_churn for e in ep), default=0.0),
                    min((e.true_churn_at_trigger for e in ep), default=0.0),
                    ec.ledger.good_compute, costs[CCom].ledger.good_compute)


# ---- no-attack comparison against SybilControl ------------------------
def no_attack_pct(seed: int, model: SessionModel, n0: int = 1000, horizon_s: float = WEEK_S) -> float:
    p = ProtocolParams(n0=n0)
    cc = CCom(p, seed=seed)
    sc = SybilControl(SybilControlParams(alpha=p.alpha, round_seconds=p.round_seconds), seed=seed)
    rounds = math.floor(horizon_s / p.round_seconds) + 1
    for eng in (cc, sc):
        sch = schedule(model, n0, eng.churn_seed, p, horizon_s=horizon_s)
        eng.record_timeline = False
        eng.run(sch, rounds)
    return performance_pct(cc.ledger.good_compute, sc.ledger.good_compute)


# ---- fast churn --------------------------------------------------------
def fast_churn(seed: int, n0: int = 10_000, joins: int = 15_000, p_bad: float = 0.5,
               round_seconds: float = 0.1) -> tuple[float, float]:
    """Max bad fraction under (CCom, SybilControl) on the same trace."""
    p = ProtocolParams(n0=n0, round_seconds=round_seconds)
    out = []
    for eng in (CCom(p, seed=seed),
                SybilControl(SybilControlParams(alpha=p.alpha, round_seconds=round_seconds), seed=seed)):
        sch = schedule(FAST_CHURN, n0, eng.churn_seed, p, horizon_s=1e12, max_joins=joins, p_bad=p_bad)
        eng.record_timeline = False
        eng.run(sch, rounds_through(sch, round_seconds))
        out.append(eng.max_bad_fraction)
    return out[0], out[1]


# ---- puzzle concentration ---------------------------------------------
def concrete_costs(params: PuzzleParams, solves: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.empty(solves, dtype=np.int64)
    for i in range(solves):
        sol = solve_puzzle(params, PuzzleBinding.entrance(i + 1, 0), 10**12, rng=rng)
        out[i] = sol.hash_evals_spent
    return out


def analytic_costs(params: PuzzleParams, solves: int, seed: int = 0) -> np.ndarray:
    return np.asarray(analytic_solve_cost(params, np.random.default_rng(seed), size=solves))


# ---- bounded latency ---------------------------------------------------
def seat_win_rate(seed: int, alpha: float, delta_rounds: int, n0: int = 1000,
                  rounds: int = 10_000, rate: float = 2.0) -> float:
    """Share of committee seats won by a seat-grabbing adversary."""
    p = ProtocolParams(n0=n0, alpha=alpha, delta_rounds=delta_rounds)
    eng = CCom(p, SteadyJoin(rate=rate, seat_grab=True), seed=seed)
    sch = schedule(DEBIAN, int(n0 * 1.1), eng.churn_seed, p, horizon_s=rounds * p.round_seconds,
                   min_population=n0)
    eng.record_timeline = False
    eng.run(sch, rounds)
    seats = sum(e.committee_seats for e in eng.epochs)
    return sum(e.bad_seats for e in eng.epochs) / seats if seats else 0.0


def latency_pair(seed: int, alpha: float = 1 / 16, delta_rounds: int = 1, **kw) -> tuple[float, float]:
    return (seat_win_rate(seed, alpha, delta_rounds, **kw),
            seat_win_rate(seed, effective_alpha(alpha, delta_rounds), 0, **kw))
