"""SybilControl baseline: every ID is puzzle-tested by its neighbours each period.

IDs are staggered by the round they joined in, so a test period of ``P``
rounds tests roughly ``1/P`` of the population per round. Challenges that
land together are combined, so each tested ID solves one puzzle per period.
Periodic test solutions are charged to ``good_purge`` in the ledger.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adversary import Adversary, PublicView, Strategy
from .churn import JOIN, ChurnSchedule
from .identity_net import KeyRegistry
from .metrics import CostLedger, Timeline
from .puzzles import PuzzleParams, analytic_batch_cost


@dataclass(frozen=True)
class SybilControlParams:
    alpha: float = 1 / 6
    round_seconds: float = 5.0
    test_period_s: float = 5.0
    puzzle: PuzzleParams = PuzzleParams(mu=2**20)
    use_overlay: bool = False
    delta_rounds: int = 0

    @property
    def period_rounds(self) -> int:
        return max(1, round(self.test_period_s / self.round_seconds))


def overlay_degree(n: int) -> int:
    return max(1, math.ceil(2 * math.log2(max(n, 2))))


class Overlay:
    """Symmetric random neighbour graph; each joiner links to ``degree`` live IDs."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.adj: dict[int, set[int]] = {}
        self._nodes: list[int] = []
        self._pos: dict[int, int] = {}

    def __len__(self):
        return len(self.adj)

    def add(self, key: int):
        others = len(self._nodes)
        links = set()
        if others:
            want = min(others, overlay_degree(others + 1))
            for i in self.rng.choice(others, size=want, replace=False):
                links.add(self._nodes[i])
        self.adj[key] = links
        for other in links:
            self.adj[other].add(key)
        self._pos[key] = len(self._nodes)
        self._nodes.append(key)

    def remove(self, key: int):
        links = self.adj.pop(key, None)
        if links is None:
            return
        for other in links:
            self.adj[other].discard(key)
        # swap-remove keeps sampling O(1)
        i = self._pos.pop(key)
        last = self._nodes.pop()
        if last != key:
            self._nodes[i] = last
            self._pos[last] = i

    def degree(self, key: int) -> int:
        return len(self.adj.get(key, ()))


class SybilControl:
    def __init__(self, params: SybilControlParams, strategy: Strategy | None = None,
                 seed: int | np.random.SeedSequence = 0):
        self.params = params
        self.puzzle = params.puzzle
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        # same spawn order as the committee engines so churn traces match
        churn_ss, proto_ss, adv_ss, _ = ss.spawn(4)
        self.churn_seed = churn_ss
        self.rng = np.random.default_rng(proto_ss)
        self.registry = KeyRegistry(self.rng.bytes(32), first_key=2**40)
        self.adversary = Adversary(params.alpha, self.puzzle.mu, strategy or Strategy(),
                                   params.delta_rounds, np.random.default_rng(adv_ss))
        self.ledger = CostLedger()
        self.timeline = Timeline()
        self.record_timeline = True
        self.overlay = Overlay(self.rng) if params.use_overlay else None

        period = params.period_rounds
        self.good_phase: dict[int, int] = {}
        self.good_by_phase = np.zeros(period, dtype=np.int64)
        self.bad_by_phase: list[list[int]] = [[] for _ in range(period)]
        self.bad_total = 0
        self.silenced: set[int] = set()
        self.round = 0
        self.max_bad_fraction = 0.0
        self._round_peak = 0.0
        self.pruned_bad = 0

    @property
    def good_count(self) -> int:
        return len(self.good_phase)

    @property
    def bad_count(self) -> int:
        return self.bad_total

    def bad_fraction(self) -> float:
        total = self.good_count + self.bad_total
        return self.bad_total / total if total else 0.0

    def _observe(self):
        f = self.bad_fraction()
        self._round_peak = max(self._round_peak, f)
        self.max_bad_fraction = max(self.max_bad_fraction, f)

    # ---- membership ---------------------------------------------------
    def _add_good(self, key: int, phase: int):
        self.good_phase[key] = phase
        self.good_by_phase[phase] += 1
        if self.overlay is not None:
            self.overlay.add(key)

    def bootstrap(self, good_keys, bad_count: int = 0):
        period = self.params.period_rounds
        for i, key in enumerate(good_keys):
            self._add_good(key, i % period)
        if bad_count:
            for i, key in enumerate(self.registry.new_keys(bad_count)):
                self._add_bad(key, i % period)
        self._observe()

    def _add_bad(self, key: int, phase: int):
        self.bad_by_phase[phase].append(key)
        self.bad_total += 1
        if self.overlay is not None:
            self.overlay.add(key)

    def sc_join(self, key: int, good: bool = True):
        """Admit a joiner whose entrance puzzle checked out; it is first
        tested one full period from now."""
        phase = self.round % self.params.period_rounds
        if good:
            self.ledger.good_entrance += 1
            self.ledger.g_new += 1
            self.ledger.good_bandwidth += 2
            self.ledger.good_verify += self.puzzle.ell / self.puzzle.expected_evals
            self._add_good(key, phase)
        else:
            self._add_bad(key, phase)
        self._observe()

    def depart(self, key: int):
        phase = self.good_phase.pop(key, None)
        if phase is None:
            return
        self.good_by_phase[phase] -= 1
        if self.overlay is not None:
            self.overlay.remove(key)
        self._observe()

    # ---- periodic tests -----------------------------------------------
    def sc_step(self):
        """Test every ID whose phase comes up this round; bad IDs the
        adversary cannot pay for are pruned."""
        phase = self.round % self.params.period_rounds
        p = self.puzzle
        if self.overlay is None:
            due_good = int(self.good_by_phase[phase])
            deg = overlay_degree(self.good_count + self.bad_total)
            self.ledger.good_bandwidth += 2 * deg * due_good
        else:
            due_good = 0
            for key, ph in self.good_phase.items():
                if ph == phase:
                    d = self.overlay.degree(key)
                    if d:
                        due_good += 1
                        self.ledger.good_bandwidth += 2 * d
        self.ledger.good_purge += due_good
        self.ledger.good_verify += due_good * p.ell / p.expected_evals

        due = self.bad_by_phase[phase]
        if not due:
            return
        if self.silenced:
            live = [k for k in due if k not in self.silenced]
            self._prune(due, len(due) - len(live))
            due[:] = live
        funded = self.adversary.fund_fresh(len(due), lambda n: analytic_batch_cost(p, self.adversary.rng, n))
        self.ledger.adv_evals = self.adversary.spent_evals
        self.ledger.adv_compute = self.adversary.spent_evals / p.expected_evals
        self.ledger.adv_bandwidth = self.adversary.diffuse_calls
        if funded < len(due):
            dropped = due[funded:]
            del due[funded:]
            self._prune(dropped, len(dropped))

    def _prune(self, keys, n: int):
        self.bad_total -= n
        self.pruned_bad += n
        if self.overlay is not None:
            for key in keys:
                self.overlay.remove(key)

    def _bad_joins(self, attempts: int):
        if attempts <= 0:
            return
        p = self.puzzle
        funded = self.adversary.fund_entrances(attempts, lambda n: analytic_batch_cost(p, self.adversary.rng, n))
        self.ledger.adv_evals = self.adversary.spent_evals
        self.ledger.adv_compute = self.adversary.spent_evals / p.expected_evals
        self.ledger.adv_bandwidth = self.adversary.diffuse_calls
        if funded <= 0:
            return
        self.ledger.good_bandwidth += funded
        self.ledger.good_verify += funded * p.ell / p.expected_evals
        frac = self.adversary.strategy.silence_fraction
        keys = self.registry.new_keys(funded)
        mask = self.adversary.rng.random(funded) < frac if frac > 0 else None
        for i, key in enumerate(keys):
            self.sc_join(key, good=False)
            if mask is not None and mask[i]:
                self.silenced.add(key)

    def view(self, scheduled_bad: int = 0) -> PublicView:
        size = self.good_count + self.bad_total
        return PublicView(self.round, self.round * self.params.round_seconds, size, size, 0,
                          False, self.bad_total, self.params.delta_rounds, scheduled_bad)

    def run(self, schedule: ChurnSchedule, horizon_rounds: int, initial_bad: int = 0) -> "SybilControl":
        if not self.good_phase and not self.bad_total:
            self.bootstrap(schedule.initial_keys, initial_bad)
        events = schedule.events
        n_events = len(events)
        i = 0
        rs = self.params.round_seconds
        adv = self.adversary
        for r in range(horizon_rounds):
            self.round = r
            self._round_peak = self.bad_fraction()
            adv.begin_round(self.good_count, False)
            self.sc_step()
            end_t = (r + 1) * rs
            scheduled_bad = 0
            while i < n_events and events[i].time < end_t:
                e = events[i]
                i += 1
                if e.kind == JOIN:
                    if e.good:
                        self.sc_join(e.key, True)
                    else:
                        scheduled_bad += 1
                else:
                    self.depart(e.key)
            self._bad_joins(adv.strategy.join_attempts(self.view(scheduled_bad)))
            adv.end_round()
            if self.record_timeline:
                self._record()
        return self

    def _record(self):
        good, bad = self.good_count, self.bad_total
        total = good + bad
        self.timeline.record((
            self.round, self.round * self.params.round_seconds, total, good, bad,
            bad / total if total else 0.0, self._round_peak, 0, 0, 0, 0.0, 1, 0, 0), self.ledger)
