"""CCom: entrance-puzzle admission, purge trigger, purges and committee election.

Two views of the population are kept apart. ``s_cur``/``s_old``/``symdiff``
are what the committee knows; departures reach it only when the (possibly
delayed) notice arrives. ``live_good``/``bad`` are ground truth and are what
the goal checks read.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import consensus
from .adversary import Adversary, PublicView, Strategy
from .churn import DEPART, JOIN, ChurnSchedule
from .consensus import Committee, EmptyCommittee, NoGoodMajority
from .election import ElectionResult, elect_committee, formation_records, sample_election
from .identity_net import KeyRegistry, max_alpha
from .metrics import CostLedger, Timeline
from .puzzles import (Exhausted, InvalidReason, PuzzleBinding, PuzzleParams, PuzzleSolution, analytic_batch_cost,
                      analytic_solve_cost, encode, oracle_hash, solve_puzzle, verify_solution)

ANALYTIC, CONCRETE = "analytic", "concrete"


@dataclass(frozen=True)
class MembershipIntervalParams:
    d: int = 20
    gamma: float = 1.0

    def __post_init__(self):
        if self.d < 20 * self.gamma:
            raise ValueError(f"d={self.d} must be at least 20*gamma={20 * self.gamma:g}")


@dataclass(frozen=True)
class ProtocolParams:
    n0: int = 1000
    alpha: float = 1 / 6
    gamma: float = 1.0
    d: int = 20
    epsilon0: float = 0.04
    delta_rounds: int = 0
    round_seconds: float = 5.0
    puzzle: PuzzleParams = PuzzleParams(mu=2**20)
    mode: str = ANALYTIC
    margin: int = 2
    sample_c: float = 8.0
    strict: bool = False

    def __post_init__(self):
        MembershipIntervalParams(self.d, self.gamma)
        if self.n0 < 2:
            raise ValueError("n0 must be at least 2")
        if self.alpha > max_alpha(self.delta_rounds) + 1e-12:
            raise ValueError(f"alpha={self.alpha:g} exceeds {max_alpha(self.delta_rounds):g} "
                             f"allowed at delta_rounds={self.delta_rounds}")
        if self.mode not in (ANALYTIC, CONCRETE):
            raise ValueError(f"mode must be {ANALYTIC!r} or {CONCRETE!r}")

    @property
    def window_rounds(self) -> int:
        return 1 + 2 * self.delta_rounds


class RejectReason(enum.Enum):
    INVALID_SOLUTION = "InvalidSolution"
    STALE_TIMESTAMP = "StaleTimestamp"
    DUPLICATE_KEY = "DuplicateKey"


class JoinRejected(Exception):
    def __init__(self, reason: RejectReason):
        super().__init__(reason.value)
        self.reason = reason


@dataclass
class EpochRecord:
    epoch: int
    opened: int
    resolved: int
    size_before: int
    bad_before: int
    s_old_size: int
    symdiff_at_trigger: int
    true_churn_at_trigger: float
    max_true_churn: float
    good_after: int
    bad_after: int
    committee_seats: int
    committee_size: int
    committee_good: int
    roster_agreed: bool
    adv_budget: float
    adv_spent: float
    funded: int
    candidates: int
    bad_seats: int = 0
    sample_old_size: int = 0
    sample_symdiff_at_trigger: int = 0

    @property
    def bad_fraction_after(self) -> float:
        total = self.good_after + self.bad_after
        return self.bad_after / total if total else 0.0

    @property
    def committee_good_fraction(self) -> float:
        return self.committee_good / self.committee_size if self.committee_size else 0.0


@dataclass
class _Join:
    key: int
    good: bool
    received: int
    count: int = 1  # bad joins arrive as a run of consecutive keys


class CCom:
    """One protocol instance plus its round loop."""

    def __init__(self, params: ProtocolParams, strategy: Strategy | None = None,
                 seed: int | np.random.SeedSequence = 0):
        self.params = params
        self.puzzle = params.puzzle
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        # churn stream is spawned first so other engines see identical traces
        churn_ss, proto_ss, adv_ss, puzzle_ss = ss.spawn(4)
        self.churn_seed = churn_ss
        self.rng = np.random.default_rng(proto_ss)
        self.puzzle_rng = np.random.default_rng(puzzle_ss)
        self.registry = KeyRegistry(np.random.default_rng(proto_ss.spawn(1)[0]).bytes(32),
                                    first_key=2**40)
        self.adversary = Adversary(params.alpha, self.puzzle.mu, strategy or Strategy(),
                                   params.delta_rounds, np.random.default_rng(adv_ss))
        self.ledger = CostLedger()
        self.timeline = Timeline()
        self.record_timeline = True

        self.s_old: set[int] = set()
        self.s_cur: set[int] = set()
        self.symdiff = 0
        self.live_good: set[int] = set()
        self.bad: set[int] = set()
        self.silenced: set[int] = set()
        self.true_symdiff = 0
        self.committee: Committee | None = None
        self.roster_agreed = True
        self.seed = b""
        self.epoch = 0
        self.epochs: list[EpochRecord] = []
        self.counters = dict(good_joins=0, bad_joins=0, good_departs=0, bad_departs=0)

        self.queue: deque[_Join] = deque()
        self._queued_good: set[int] = set()
        self.cancelled: set[int] = set()
        self.notices: dict[int, list[int]] = {}
        self.purge_open: int | None = None
        self.purged_in_round: int | None = None
        self._epoch_max_true = 0.0
        self._trigger_symdiff = 0
        self._trigger_true = 0.0

        self.round = 0
        self.max_bad_fraction = 0.0
        self._round_peak = 0.0
        self.max_post_purge_bad_fraction = 0.0
        self.committee_failures = 0
        self.stale_notices = 0
        self.unknown_departures = 0
        self.max_trigger_overshoot = 0
        self.expired_joins = 0
        self.bad_admitted = 0

    # ---- ground truth -------------------------------------------------
    @property
    def good_count(self) -> int:
        return len(self.live_good)

    @property
    def bad_count(self) -> int:
        return len(self.bad)

    def bad_fraction(self) -> float:
        total = len(self.live_good) + len(self.bad)
        return len(self.bad) / total if total else 0.0

    def _observe(self):
        f = self.bad_fraction()
        if f > self._round_peak:
            self._round_peak = f
        if f > self.max_bad_fraction:
            self.max_bad_fraction = f
        if self.s_old:
            churn = self.true_symdiff / len(self.s_old)
            if churn > self._epoch_max_true:
                self._epoch_max_true = churn

    # ---- setup --------------------------------------------------------
    def bootstrap(self, good_keys, bad_count: int = 0):
        """Install the initial population and an initial committee.

        The initial election is not charged: initial setup is outside the
        cost accounting.
        """
        self.live_good = set(good_keys)
        self.bad = set(self.registry.new_keys(bad_count))
        self.s_cur = self.live_good | self.bad
        self.s_old = set(self.s_cur)
        keys = np.fromiter(sorted(self.s_cur), dtype=np.int64)
        evals = analytic_solve_cost(self.puzzle, self.rng, size=len(keys))
        result = sample_election(keys, evals, self.params.d, self.rng)
        self.committee = Committee.build(result.members, self.live_good, 0, 0, result.seats)
        self.seed = consensus.generate_seed(self.committee, self.rng, self._seed_bits())
        self._observe()

    def _seed_bits(self) -> int:
        return consensus.seed_length_bits(self.params.n0, self.params.gamma)

    # ---- joins and departures -----------------------------------------
    def threshold(self) -> int:
        return math.ceil(len(self.s_old) / 3)

    def purge_needed(self) -> bool:
        return self.symdiff >= len(self.s_old) / 3

    def _trigger_room(self) -> int:
        """How many more admissions the trigger allows before firing."""
        return max(0, self.threshold() - self.symdiff)

    def _admit(self, keys, good: bool):
        n = len(keys)
        if good:
            self.live_good.update(keys)
        else:
            self.bad.update(keys)
            frac = self.adversary.strategy.silence_fraction
            if frac > 0:
                mask = self.adversary.rng.random(n) < frac
                self.silenced.update(k for k, m in zip(keys, mask) if m)
        self.s_cur.update(keys)
        self.symdiff += n
        self.true_symdiff += n
        self.counters["good_joins" if good else "bad_joins"] += n
        if not good:
            self.bad_admitted += n
        self._observe()

    def handle_join(self, key: int, solution: PuzzleSolution, now: int, good: bool = True):
        """Verify an entrance solution and admit its key."""
        if key in self.s_cur or key in self.s_old:
            raise JoinRejected(RejectReason.DUPLICATE_KEY)
        self.ledger.good_bandwidth += 1  # verifier's verdict
        stamp = solution.binding.timestamp
        if stamp is None or solution.binding.key != key:
            raise JoinRejected(RejectReason.INVALID_SOLUTION)
        verdict = verify_solution(self.puzzle, solution, PuzzleBinding.entrance(key, stamp),
                                  now=now, margin=self.params.margin)
        self._charge_verify(verdict.hash_evals)
        if verdict.reason is InvalidReason.STALE_TIMESTAMP:
            raise JoinRejected(RejectReason.STALE_TIMESTAMP)
        if not verdict:
            raise JoinRejected(RejectReason.INVALID_SOLUTION)
        self._admit([key], good)

    def handle_departure(self, key: int):
        """Committee-side processing of a departure notice."""
        if key not in self.s_cur:
            self.unknown_departures += 1
            return
        self.s_cur.discard(key)
        if key in self.s_old:
            self.symdiff += 1
        else:
            self.symdiff -= 1
        self._on_departure_noticed(key)

    def _on_departure_noticed(self, key: int):
        pass

    def _depart_ground_truth(self, key: int, good: bool):
        if good:
            if key not in self.live_good:
                if key in self._queued_good:
                    self.cancelled.add(key)
                return False
            self.live_good.discard(key)
            self.counters["good_departs"] += 1
        else:
            if key not in self.bad:
                return False
            self.bad.discard(key)
            self.counters["bad_departs"] += 1
        if key in self.s_old:
            self.true_symdiff += 1
        else:
            self.true_symdiff -= 1
        self._observe()
        return True

    # ---- verification and cost helpers --------------------------------
    def _charge_verify(self, hash_evals: float):
        self.ledger.good_verify += hash_evals / self.puzzle.expected_evals

    def _charge_adv(self, evals: float, available: float):
        self.adversary.spend(evals, available)
        self.ledger.adv_evals = self.adversary.spent_evals
        self.ledger.adv_compute = self.adversary.spent_evals / self.puzzle.expected_evals

    # ---- purge --------------------------------------------------------
    def open_purge(self, now: int):
        """Committee agrees on a fresh seed and diffuses it; the response
        window starts now and closes at the end of round ``now + 2*delta``."""
        self._trigger_symdiff = self.symdiff
        self.max_trigger_overshoot = max(self.max_trigger_overshoot, self.symdiff - self.threshold())
        self._trigger_true = self.true_symdiff / len(self.s_old) if self.s_old else 0.0
        committee = self.committee
        departed = committee.good_members - self.live_good
        try:
            if not committee.has_good_majority(departed):
                raise NoGoodMajority(f"epoch {self.epoch}: committee lost its good majority")
            self.seed = consensus.generate_seed(committee, self.rng, self._seed_bits())
        except NoGoodMajority:
            self.committee_failures += 1
            if self.params.strict:
                raise
            self.seed = self.rng.bytes(-(-self._seed_bits() // 8))
        self.ledger.good_bc_messages += len(committee) ** 2
        self.ledger.good_bandwidth += committee.good_count - len(departed)
        adv = self.adversary
        adv.purge_pool += adv.round_left
        adv.round_left = 0.0
        self.purge_open = now

    def resolve_purge(self, now: int, candidates_override: list[int] | None = None):
        """Collect responses, rebuild S and S_old, elect and disseminate."""
        p = self.params
        # set iteration order is a deterministic function of the run's history
        good_keys = np.fromiter(self.live_good, dtype=np.int64, count=len(self.live_good))
        if candidates_override is not None:
            candidates = list(candidates_override)
        elif self.silenced:
            candidates = [k for k in self.bad if k not in self.silenced]
        else:
            candidates = list(self.bad)
        strategy = self.adversary.strategy
        if strategy.fund_limit is not None:
            candidates = candidates[: max(0, int(strategy.fund_limit))]
        budget = self.adversary.take_purge_budget()
        size_before = len(self.live_good) + len(self.bad)
        bad_before = len(self.bad)

        if p.mode == CONCRETE:
            good_ok, good_evals, bad_keys, bad_evals, spent, traces = self._concrete_responses(
                good_keys, candidates, budget, strategy.seat_grab)
        else:
            good_ok = good_keys
            good_evals = analytic_solve_cost(self.puzzle, self.puzzle_rng, size=len(good_keys))
            bad_keys, bad_evals, spent = self._fund_analytic(candidates, budget, strategy.seat_grab)
            traces = None
        self._charge_adv(spent, budget)
        self.adversary.return_unspent(budget - spent)
        self.adversary.diffuse_calls += len(bad_keys)
        self.ledger.adv_bandwidth = self.adversary.diffuse_calls

        n_good = len(good_ok)
        self.ledger.good_purge += n_good * self.puzzle.rho
        self.ledger.good_bandwidth += n_good

        if traces is not None:
            result = elect_committee(traces, p.d)
        else:
            keys = np.concatenate([good_ok, np.asarray(bad_keys, dtype=np.int64)])
            evals = np.concatenate([np.asarray(good_evals, dtype=np.int64),
                                    np.asarray(bad_evals, dtype=np.int64)])
            result = sample_election(keys, evals, p.d, self.rng)
        # responders' solutions plus every claimed interval minimum are re-checked
        self._charge_verify((n_good + len(bad_keys)) * self.puzzle.ell + result.seats)
        self.ledger.good_bandwidth += formation_records(self.rng, n_good + len(bad_keys))

        if len(good_ok) == len(self.live_good):
            new_good = self.live_good
        else:
            # concrete-mode solvers that ran out of budget are evicted and leave
            new_good = set(good_ok.tolist())
            self.counters["good_departs"] += len(self.live_good) - len(new_good)
            self.live_good = new_good
        new_bad = set(bad_keys)
        old_committee = self.committee
        self.bad = new_bad
        self.silenced &= new_bad
        self.s_old = new_good | new_bad
        self.s_cur = set(self.s_old)
        self.symdiff = 0
        self.true_symdiff = 0
        self.epoch += 1
        self.purge_open = None
        self.purged_in_round = now

        try:
            committee = Committee.build(result.members, new_good, self.epoch, now, result.seats)
        except EmptyCommittee:
            self.committee_failures += 1
            if p.strict:
                raise
            committee = old_committee
        departed = old_committee.good_members - self.live_good
        # bad outgoing members push an empty roster; any wrong view would do
        diss = consensus.disseminate_committee(committee.members, old_committee, (), departed)
        self.ledger.good_bandwidth += diss.good_diffuse_calls
        self.adversary.diffuse_calls += diss.bad_diffuse_calls
        self.ledger.adv_bandwidth = self.adversary.diffuse_calls
        self.roster_agreed = diss.agreed
        if not committee.has_good_majority() or not diss.agreed:
            self.committee_failures += 1
        self.committee = committee

        post = len(new_bad) / (len(new_good) + len(new_bad)) if (new_good or new_bad) else 0.0
        self.max_post_purge_bad_fraction = max(self.max_post_purge_bad_fraction, post)
        self.epochs.append(EpochRecord(
            epoch=self.epoch, opened=self._opened_at, resolved=now, size_before=size_before,
            bad_before=bad_before, s_old_size=self._s_old_before,
            symdiff_at_trigger=self._trigger_symdiff, true_churn_at_trigger=self._trigger_true,
            max_true_churn=self._epoch_max_true, good_after=len(new_good), bad_after=len(new_bad),
            committee_seats=committee.seats, committee_size=len(committee),
            committee_good=committee.good_count, roster_agreed=diss.agreed,
            adv_budget=budget, adv_spent=spent, funded=len(new_bad), candidates=len(candidates),
            bad_seats=int(np.isin(result.keys, np.asarray(bad_keys, dtype=np.int64)).sum())))
        self._epoch_max_true = 0.0
        self.counters = dict(good_joins=0, bad_joins=0, good_departs=0, bad_departs=0)
        self._after_purge(result)
        self._observe()
        return result

    def _after_purge(self, result: ElectionResult):
        pass

    def run_purge(self, now: int):
        self._begin_purge(now)
        return self.resolve_purge(now)

    def _begin_purge(self, now: int):
        self._opened_at = now
        self._s_old_before = len(self.s_old)
        self.open_purge(now)

    def _fund_analytic(self, candidates: list[int], budget: float, seat_grab: bool):
        """Solve for candidates in order until the budget runs out.

        Returns funded keys, each one's evaluations, and total evaluations
        spent. Work on a candidate that could not be finished is still spent.
        Seat grabbing spreads the remainder evenly over funded IDs.
        """
        if not candidates or budget < 1:
            return [], np.zeros(0, dtype=np.int64), 0.0
        costs = np.asarray(analytic_solve_cost(self.puzzle, self.adversary.rng, size=len(candidates)))
        cum = np.cumsum(costs)
        funded = int(np.searchsorted(cum, budget, side="right"))
        keys = candidates[:funded]
        evals = costs[:funded].astype(np.int64)
        used = float(cum[funded - 1]) if funded else 0.0
        if funded == len(candidates) and not seat_grab:
            return keys, evals, used
        if seat_grab and funded:
            per = math.floor((budget - used) / funded)
            return keys, evals + per, used + per * funded
        return keys, evals, math.floor(budget)

    def _concrete_responses(self, good_keys, candidates, budget, seat_grab):
        seed = self.seed
        ok, good_evals, traces = [], [], {}
        cap = 64 * self.puzzle.mu
        for key in good_keys.tolist():
            binding = PuzzleBinding.purge(key, seed)
            try:
                sol = solve_puzzle(self.puzzle, binding, cap, rng=self.puzzle_rng, keep_trace=True)
            except Exhausted:
                continue
            ok.append(key)
            good_evals.append(sol.hash_evals_spent)
            traces[key] = list(sol.trace)
        bad_keys, bad_evals, spent = [], [], 0
        starts = {}
        for key in candidates:
            left = int(budget - spent)
            if left <= 0:
                break
            binding = PuzzleBinding.purge(key, seed)
            start = int(self.adversary.rng.integers(0, 2**62))
            try:
                sol = solve_puzzle(self.puzzle, binding, left, start=start, keep_trace=True)
            except Exhausted as exc:
                spent += exc.spent
                break
            spent += sol.hash_evals_spent
            bad_keys.append(key)
            bad_evals.append(sol.hash_evals_spent)
            traces[key] = list(sol.trace)
            starts[key] = start + sol.hash_evals_spent
        if seat_grab and bad_keys:
            per = int(budget - spent) // len(bad_keys)
            for i, key in enumerate(bad_keys):
                binding = PuzzleBinding.purge(key, seed)
                n0 = starts[key]
                extra = [oracle_hash(encode(binding, (n0 + j) % 2**64)) for j in range(per)]
                traces[key].extend(extra)
                bad_evals[i] += per
                spent += per
        return np.asarray(ok, dtype=np.int64), good_evals, bad_keys, bad_evals, float(spent), traces

    # ---- round loop ---------------------------------------------------
    def view(self, scheduled_bad: int = 0) -> PublicView:
        return PublicView(self.round, self.round * self.params.round_seconds, len(self.s_cur),
                          len(self.s_old), self.symdiff, self.purge_open is not None,
                          len(self.bad), self.params.delta_rounds, scheduled_bad)

    def _admission_allowed(self) -> bool:
        return self.purge_open is None and not self.purge_needed()

    def _drop_expired(self):
        # an adversarial request still waiting once its timestamp has left the
        # freshness margin (plus the purge window) is dropped; good joiners
        # simply keep waiting
        horizon = self.round - self.params.margin - 2 * self.params.delta_rounds
        q = self.queue
        while q and not q[0].good and q[0].received < horizon:
            self.expired_joins += q.popleft().count

    def _admit_from_queue(self):
        self._drop_expired()
        while self.queue and self._admission_allowed():
            item = self.queue[0]
            if item.good:
                self.queue.popleft()
                self._queued_good.discard(item.key)
                if item.key in self.cancelled:
                    self.cancelled.discard(item.key)
                    continue
                self._admit([item.key], True)
                continue
            room = self._room_for_bad(item)
            if room >= item.count:
                self.queue.popleft()
                self._admit(range(item.key, item.key + item.count), False)
            else:
                self._admit(range(item.key, item.key + room), False)
                item.key += room
                item.count -= room

    def _room_for_bad(self, item: _Join) -> int:
        return self._trigger_room()

    def _enqueue_good_join(self, key: int):
        self.ledger.good_entrance += 1
        self.ledger.g_new += 1
        self.ledger.good_bandwidth += 2  # joiner's solution and verifier's verdict
        self._charge_verify(self.puzzle.ell)
        self.queue.append(_Join(key, True, self.round))
        self._queued_good.add(key)

    def _enqueue_bad_joins(self, count: int):
        if count <= 0:
            return
        funded = self.adversary.fund_entrances(
            count, lambda n: analytic_batch_cost(self.puzzle, self.adversary.rng, n))
        self.ledger.adv_evals = self.adversary.spent_evals
        self.ledger.adv_compute = self.adversary.spent_evals / self.puzzle.expected_evals
        self.ledger.adv_bandwidth = self.adversary.diffuse_calls
        if funded <= 0:
            return
        keys = self.registry.new_keys(funded)
        self.ledger.good_bandwidth += funded
        self._charge_verify(funded * self.puzzle.ell)
        self.queue.append(_Join(keys.start, False, self.round, funded))

    def _announce_departure(self, key: int, good: bool, r: int):
        # a departing good ID diffuses its notice; the adversary may hold it back
        if good:
            self.ledger.good_bandwidth += 1
        delay = self.adversary.departure_delay(self.view()) if self.params.delta_rounds else 0
        if delay == 0:
            self.handle_departure(key)
        else:
            self.notices.setdefault(r + delay, []).append(key)

    def _per_round(self):
        pass

    def run(self, schedule: ChurnSchedule, horizon_rounds: int, initial_bad: int = 0) -> "CCom":
        """Drive the protocol for ``horizon_rounds`` rounds over ``schedule``."""
        p = self.params
        if self.committee is None:
            self.bootstrap(schedule.initial_keys, initial_bad)
        events = schedule.events
        n_events = len(events)
        i = 0
        rs = p.round_seconds
        adv = self.adversary
        for r in range(horizon_rounds):
            self.round = r
            self._round_peak = self.bad_fraction()
            in_window = self.purge_open is not None
            adv.begin_round(len(self.live_good), in_window)
            end_t = (r + 1) * rs
            scheduled_bad = 0
            while i < n_events and events[i].time < end_t:
                e = events[i]
                i += 1
                if e.kind == JOIN:
                    if e.good:
                        self._enqueue_good_join(e.key)
                    else:
                        scheduled_bad += 1
                elif self._depart_ground_truth(e.key, e.good):
                    self._announce_departure(e.key, e.good, r)
            due = self.notices.pop(r, None)
            if due:
                for key in due:
                    if key in self.s_cur:
                        self.handle_departure(key)
                    else:
                        self.stale_notices += 1
            attempts = adv.strategy.join_attempts(self.view(scheduled_bad))
            self._enqueue_bad_joins(attempts)
            self._step_admissions(r)
            self._per_round()
            adv.end_round()
            if self.record_timeline:
                self._record()
        return self

    def _step_admissions(self, r: int):
        p = self.params
        self._admit_from_queue()
        if self.purge_open is None and self.purge_needed() and self.purged_in_round != r:
            self._begin_purge(r)
        if self.purge_open is not None and r >= self.purge_open + 2 * p.delta_rounds:
            self.resolve_purge(r)
            self._admit_from_queue()

    def _committee_good_fraction(self) -> float:
        c = self.committee
        live = len(c.good_members & self.live_good) if c.good_members else 0
        return live / len(c) if len(c) else 0.0

    def _sample_columns(self) -> tuple[int, int]:
        return 0, 0

    def _record(self):
        c = self.committee
        good, bad = len(self.live_good), len(self.bad)
        total = good + bad
        ss, sd = self._sample_columns()
        self.timeline.record((
            self.round, self.round * self.params.round_seconds, len(self.s_cur), good, bad,
            bad / total if total else 0.0, self._round_peak, self.epoch, len(c), c.seats,
            self._committee_good_fraction(), int(self.roster_agreed), ss, sd), self.ledger)
