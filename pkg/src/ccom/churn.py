"""Good-ID churn: Weibull session workloads, trace files, and the per-round rate cap."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

JOIN, DEPART = "J", "D"


class ChurnEvent(NamedTuple):
    time: float
    kind: str
    key: int
    good: bool = True


class TraceError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ParseError(TraceError):
    pass


class OrderViolation(TraceError):
    pass


class DanglingDepart(TraceError):
    pass


class DuplicateJoin(TraceError):
    pass


@dataclass(frozen=True)
class SessionModel:
    shape: float
    scale: float
    unit_seconds: float = 60.0

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0 or self.unit_seconds <= 0:
            raise ValueError("shape, scale and unit_seconds must be positive")

    @classmethod
    def from_median(cls, shape: float, median: float, unit_seconds: float = 60.0) -> "SessionModel":
        return cls(shape, median / math.log(2.0) ** (1.0 / shape), unit_seconds)

    @classmethod
    def from_mean(cls, shape: float, mean: float, unit_seconds: float = 60.0) -> "SessionModel":
        return cls(shape, mean / math.gamma(1.0 + 1.0 / shape), unit_seconds)

    @property
    def scale_seconds(self) -> float:
        return self.scale * self.unit_seconds

    @property
    def mean_seconds(self) -> float:
        return self.scale_seconds * math.gamma(1.0 + 1.0 / self.shape)

    @property
    def median_seconds(self) -> float:
        return self.scale_seconds * math.log(2.0) ** (1.0 / self.shape)


DEBIAN = SessionModel(0.38, 42.2)
FLATOUT = SessionModel(0.59, 41.9)
SKYPE = SessionModel.from_median(0.64, 5.5 * 60)


class _Buffered:
    """Amortises numpy's per-call overhead for scalar draws."""

    def __init__(self, draw, block: int = 4096):
        self._draw, self._block = draw, block
        self._buf, self._i = draw(block), 0

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf, self._i = self._draw(self._block), 0
        self._i += 1
        return float(self._buf[self._i - 1])


@dataclass
class ChurnSchedule:
    initial_keys: list[int]
    events: list[ChurnEvent]
    initial_bad_keys: list[int] = field(default_factory=list)

    @property
    def good_joins(self) -> int:
        return sum(1 for e in self.events if e.kind == JOIN and e.good)


def weibull_sessions(model: SessionModel, n_ids: int, horizon_s: float, rng: np.random.Generator,
                     think_mean_s: float | None = None, min_population: int = 0,
                     p_bad: float = 0.0, max_events: int | None = None,
                     max_joins: int | None = None, first_key: int = 1) -> ChurnSchedule:
    """``n_ids`` slots start online; each cycles through a Weibull session and
    an exponential offline gap, rejoining under a fresh key.

    A departure that would take the good population below ``min_population``
    is postponed by a fresh session. With ``p_bad > 0`` a rejoin is an
    adversarial ID with that probability; such IDs never leave, so the slot
    is retired.
    """
    if n_ids < 1:
        raise ValueError("n_ids must be at least 1")
    think = model.mean_seconds * 0.1 if think_mean_s is None else think_mean_s
    session = _Buffered(lambda n: rng.weibull(model.shape, n) * model.scale_seconds)
    gap = _Buffered(lambda n: rng.exponential(think, n) if think > 0 else np.zeros(n))
    coin = _Buffered(lambda n: rng.random(n))

    next_key = first_key
    initial = list(range(next_key, next_key + n_ids))
    next_key += n_ids
    heap: list[tuple[float, int, str, int]] = []
    for key in initial:
        heapq.heappush(heap, (session(), key, DEPART, key))
    online = n_ids
    events: list[ChurnEvent] = []
    joins = 0
    while heap:
        t, _, kind, key = heapq.heappop(heap)
        if t > horizon_s:
            break
        if kind == DEPART:
            if online - 1 < min_population:
                heapq.heappush(heap, (t + session(), key, DEPART, key))
                continue
            online -= 1
            events.append(ChurnEvent(t, DEPART, key, True))
            heapq.heappush(heap, (t + gap(), next_key, JOIN, next_key))
            next_key += 1
        else:
            new_key = key
            joins += 1
            if p_bad > 0 and coin() < p_bad:
                events.append(ChurnEvent(t, JOIN, new_key, False))
            else:
                online += 1
                events.append(ChurnEvent(t, JOIN, new_key, True))
                heapq.heappush(heap, (t + session(), new_key, DEPART, new_key))
        if max_events is not None and len(events) >= max_events:
            break
        if max_joins is not None and joins >= max_joins:
            break
    return ChurnSchedule(initial, events)


@dataclass
class CapReport:
    shifted: int
    max_shift_s: float
    rounds_at_cap: int


def enforce_rate_cap(events: Iterable[ChurnEvent], epsilon0: float, round_seconds: float,
                     initial_good: int) -> tuple[list[ChurnEvent], CapReport]:
    """Defer good events past ``max(1, floor(epsilon0 * G))`` per round, FIFO.

    ``G`` is the good population at the start of the round being filled.
    Adversarial events are not capped. Deferred events take the start time of
    the round they land in, so relative order among good events is kept.
    """
    out: list[ChurnEvent] = []
    g = initial_good
    fill_round, used, cap = None, 0, 0
    shifted, max_shift, at_cap = 0, 0.0, 0
    for e in events:
        if not e.good:
            out.append(e)
            continue
        r = math.floor(e.time / round_seconds)
        if fill_round is None or r > fill_round:
            fill_round, used = r, 0
            cap = max(1, math.floor(epsilon0 * g))
        if used >= cap:
            at_cap += 1
            fill_round, used = fill_round + 1, 0
            cap = max(1, math.floor(epsilon0 * g))
        used += 1
        if fill_round != r:
            t = fill_round * round_seconds
            shifted += 1
            max_shift = max(max_shift, t - e.time)
            e = e._replace(time=t)
        out.append(e)
        g += 1 if e.kind == JOIN else -1
    out.sort(key=lambda ev: ev.time)
    return out, CapReport(shifted, max_shift, at_cap)


def rate_cap_violations(events: Iterable[ChurnEvent], epsilon0: float, round_seconds: float,
                        initial_good: int) -> list[int]:
    """Rounds where good events exceed the cap (recount after shifting)."""
    bad_rounds = []
    g = initial_good
    cur, used, cap = None, 0, 0
    for e in events:
        if not e.good:
            continue
        r = math.floor(e.time / round_seconds)
        if r != cur:
            cur, used, cap = r, 0, max(1, math.floor(epsilon0 * g))
        used += 1
        if used == cap + 1:
            bad_rounds.append(r)
        g += 1 if e.kind == JOIN else -1
    return bad_rounds


def load_trace(path: str | Path, first_key: int = 1) -> list[ChurnEvent]:
    """Parse ``time_seconds,J|D,label`` lines; ``#`` starts a comment.

    Labels are replaced by fresh integer keys, one per session.
    """
    events: list[ChurnEvent] = []
    active: dict[str, int] = {}
    next_key = first_key
    last_t = -math.inf
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3 or parts[1] not in (JOIN, DEPART) or not parts[2]:
                raise ParseError(lineno, f"expected 'time,J|D,label', got {raw.rstrip()!r}")
            try:
                t = float(parts[0])
            except ValueError:
                raise ParseError(lineno, f"bad timestamp {parts[0]!r}") from None
            if not math.isfinite(t) or t < 0:
                raise ParseError(lineno, f"bad timestamp {parts[0]!r}")
            if t < last_t:
                raise OrderViolation(lineno, f"time {t} before {last_t}")
            last_t = t
            label = parts[2]
            if parts[1] == JOIN:
                if label in active:
                    raise DuplicateJoin(lineno, f"{label!r} joined twice")
                active[label] = next_key
                events.append(ChurnEvent(t, JOIN, next_key, True))
                next_key += 1
            else:
                key = active.pop(label, None)
                if key is None:
                    raise DanglingDepart(lineno, f"{label!r} departs without joining")
                events.append(ChurnEvent(t, DEPART, key, True))
    return events


def write_trace(events: Iterable[ChurnEvent], path: str | Path, initial_keys: Iterable[int] = ()):
    """Inverse of :func:`load_trace`; ``initial_keys`` become joins at time 0."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# time_seconds,kind,node_label\n")
        for key in initial_keys:
            fh.write(f"0.000,{JOIN},n{key}\n")
        for e in events:
            if not e.good:
                continue
            fh.write(f"{e.time:.3f},{e.kind},n{e.key}\n")
