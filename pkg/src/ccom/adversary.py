"""Adversary budget and pluggable strategies.

Strategies only ever see a :class:`PublicView`. The committee's sampling key
and upcoming purge seeds are not reachable from here; the engine hands the
adversary a seed only once it has been diffused.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from .identity_net import DelayViolation


@dataclass(frozen=True)
class PublicView:
    round: int
    time_s: float
    system_size: int
    s_old_size: int
    symdiff: int
    purge_open: bool
    own_ids: int
    delta_rounds: int
    scheduled_bad_joins: int = 0


class Strategy:
    """Base strategy: never joins, funds every held ID, no seat grabbing."""

    name: ClassVar[str] = "idle"

    def __init__(self, seat_grab: bool = False, fund_limit: int | None = None,
                 silence_fraction: float = 0.0, delay_departures: int = 0):
        self.seat_grab = bool(seat_grab)
        self.fund_limit = fund_limit
        self.silence_fraction = float(silence_fraction)
        self.delay_departures = int(delay_departures)

    def join_attempts(self, view: PublicView) -> int:
        return view.scheduled_bad_joins

    def departure_delay(self, view: PublicView) -> int:
        return self.delay_departures

    def params(self) -> dict:
        return {"seat_grab": self.seat_grab, "fund_limit": self.fund_limit,
                "silence_fraction": self.silence_fraction,
                "delay_departures": self.delay_departures}


class BurstAttack(Strategy):
    """Every ``interval_s`` inside ``[start, end] * t_total`` ask for
    ``floor(fraction * |S|)`` joins."""

    name = "burst"

    def __init__(self, t_total: float = 604_970.0, start: float = 1 / 3, end: float = 2 / 3,
                 interval_s: float = 5.0, fraction: float = 1 / 3, **kw):
        super().__init__(**kw)
        self.t_total = float(t_total)
        self.window = (self.t_total * start, self.t_total * end)
        self.interval_s = float(interval_s)
        self.fraction = float(fraction)
        self._next_tick = self.window[0]

    def join_attempts(self, view: PublicView) -> int:
        extra = view.scheduled_bad_joins
        lo, hi = self.window
        if view.time_s < lo or view.time_s > hi or view.time_s < self._next_tick:
            return extra
        while self._next_tick <= view.time_s:
            self._next_tick += self.interval_s
        return extra + math.floor(self.fraction * view.system_size)


class SteadyJoin(Strategy):
    """A constant stream of ``rate * multiplier`` join attempts per round."""

    name = "steady"

    def __init__(self, rate: float = 0.5, multiplier: float = 1.0, **kw):
        super().__init__(**kw)
        self.rate = float(rate) * float(multiplier)
        self._carry = 0.0

    def join_attempts(self, view: PublicView) -> int:
        self._carry += self.rate
        whole = math.floor(self._carry)
        self._carry -= whole
        return whole + view.scheduled_bad_joins


STRATEGIES: dict[str, Callable[..., Strategy]] = {
    "idle": Strategy,
    "burst": BurstAttack,
    "steady": SteadyJoin,
}


def register_strategy(name: str):
    def deco(cls):
        STRATEGIES[name] = cls
        return cls
    return deco


def make_strategy(name: str, **params) -> Strategy:
    try:
        factory = STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; known: {sorted(STRATEGIES)}") from None
    return factory(**params)


@dataclass
class Adversary:
    """Hash budget of ``alpha/(1-alpha)`` times the good population's capacity.

    Capacity left unused in a round is banked. Banked work can only buy
    entrance solutions, since those may be precomputed against future
    timestamps; purge solutions need a seed that does not exist yet, so they
    draw on the current round (or the pooled purge window) alone.
    """

    alpha: float
    mu: int
    strategy: Strategy
    delta_rounds: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)

    spent_evals: int = 0     # T_C
    diffuse_calls: int = 0   # T_B
    bank_evals: float = 0.0
    round_cap: float = 0.0
    round_left: float = 0.0
    purge_pool: float = 0.0
    attempted_joins: int = 0
    funded_joins: int = 0
    max_round_overdraw: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")

    def capacity(self, good_count: int) -> float:
        return self.alpha / (1.0 - self.alpha) * good_count * self.mu

    def begin_round(self, good_count: int, in_purge_window: bool):
        self.round_cap = self.capacity(good_count)
        if in_purge_window:
            self.purge_pool += self.round_cap
            self.round_left = 0.0
        else:
            self.round_left = self.round_cap

    def end_round(self):
        self.bank_evals += self.round_left
        self.round_left = 0.0

    def spend(self, evals: float, available: float):
        if evals > available + 1e-6:
            self.max_round_overdraw = max(self.max_round_overdraw, evals - available)
        self.spent_evals += int(round(evals))

    def fund_entrances(self, attempts: int, batch_cost: Callable[[int], int]) -> int:
        """Pay for up to ``attempts`` entrance solutions; returns how many."""
        if attempts <= 0:
            return 0
        self.attempted_joins += attempts
        available = self.round_left + self.bank_evals
        if available <= 0:
            return 0
        cost = batch_cost(attempts)
        if cost <= available:
            funded, spent = attempts, cost
        else:
            funded = int(attempts * available / cost + 1e-9)
            spent = available
        self._draw(spent)
        self.spend(spent, available)
        self.funded_joins += funded
        self.diffuse_calls += funded
        return funded

    def fund_fresh(self, count: int, batch_cost: Callable[[int], int]) -> int:
        """Pay for ``count`` solutions to fresh challenges out of this round's
        capacity only; banked work is useless against an unseen challenge."""
        if count <= 0 or self.round_left <= 0:
            return 0
        cost = batch_cost(count)
        available = self.round_left
        if cost <= available:
            funded, spent = count, cost
        else:
            funded = int(count * available / cost + 1e-9)
            spent = available
        self.round_left -= spent
        self.spend(spent, available)
        self.diffuse_calls += funded
        return funded

    def _draw(self, evals: float):
        # banked work first, keeping this round's capacity free for a purge
        from_bank = min(self.bank_evals, evals)
        self.bank_evals -= from_bank
        self.round_left = max(0.0, self.round_left - (evals - from_bank))

    def take_purge_budget(self) -> float:
        pool, self.purge_pool = self.purge_pool, 0.0
        return pool

    def return_unspent(self, evals: float):
        """Unspent purge work can still be banked as entrance precomputation."""
        self.bank_evals += max(0.0, evals)

    def departure_delay(self, view: PublicView) -> int:
        d = int(self.strategy.departure_delay(view))
        if d < 0 or d > self.delta_rounds:
            raise DelayViolation(f"delay {d} outside [0, {self.delta_rounds}]")
        return d
