"""Identities, modeled signatures, and a Diffuse channel with bounded delay.

Signatures are not real public-key crypto. Each identity's signing handle is
an HMAC key derived from a per-run secret held by the :class:`KeyRegistry`;
code that lacks the handle (adversary strategies never get good IDs'
handles) cannot produce a token that verifies.
"""
from __future__ import annotations

import hashlib
import heapq
import hmac
import itertools
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable


@dataclass(frozen=True)
class Identity:
    public_key: int
    is_good: bool
    private_handle: bytes = field(repr=False, compare=False)


@dataclass(frozen=True)
class SignedMessage:
    payload: bytes
    signature: bytes
    sender_key: int


class KeyRegistry:
    """Issues unique keys for one run and checks signatures against them."""

    def __init__(self, secret: bytes, first_key: int = 1):
        self._secret = bytes(secret)
        self._counter = itertools.count(first_key)
        self._issued = 0

    def _handle(self, key: int) -> bytes:
        return hmac.new(self._secret, struct.pack(">Q", key), hashlib.sha256).digest()

    def new_key(self) -> int:
        self._issued += 1
        return next(self._counter)

    def new_keys(self, count: int) -> range:
        """Reserve ``count`` consecutive keys without building identities."""
        count = max(count, 0)
        start = next(self._counter)
        self._counter = itertools.count(start + count)
        self._issued += count
        return range(start, start + count)

    def identity(self, key: int, is_good: bool) -> Identity:
        return Identity(key, is_good, self._handle(key))

    def new_identity(self, is_good: bool) -> Identity:
        return self.identity(self.new_key(), is_good)

    @property
    def issued(self) -> int:
        return self._issued

    def verify(self, msg: SignedMessage) -> bool:
        expected = hmac.new(self._handle(msg.sender_key), msg.payload, hashlib.sha256).digest()
        return hmac.compare_digest(expected, msg.signature)


def sign(identity: Identity, payload: bytes) -> SignedMessage:
    tag = hmac.new(identity.private_handle, payload, hashlib.sha256).digest()
    return SignedMessage(bytes(payload), tag, identity.public_key)


def verify_sig(msg: SignedMessage, registry: KeyRegistry) -> bool:
    return registry.verify(msg)


@dataclass(frozen=True)
class NetworkConfig:
    delta: int = 0
    round_seconds: float = 5.0
    epsilon0: float = 0.04

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be a nonnegative number of rounds")
        if not 0.0 <= self.epsilon0 < 1.0 / 20:
            raise ValueError("epsilon0 must lie in [0, 1/20)")
        if self.round_seconds <= 0:
            raise ValueError("round_seconds must be positive")


class DelayViolation(ValueError):
    pass


@dataclass(order=True)
class Envelope:
    deliver_round: int
    seq: int
    sent_round: int = field(compare=False)
    recipient: int = field(compare=False)
    message: SignedMessage = field(compare=False)


class Network:
    """Round-synchronous Diffuse with adversary-chosen delays in ``[0, delta]``.

    ``delay_fn(message, recipient)`` is the adversary's hook; by default every
    message arrives in the round it was sent. Bandwidth is counted per call to
    :meth:`diffuse`, split by the sender's goodness.
    """

    def __init__(self, config: NetworkConfig, live_good: Callable[[], Iterable[int]] | None = None):
        self.config = config
        self.live_good = live_good or (lambda: ())
        self.delay_fn: Callable[[SignedMessage, int], int] | None = None
        self._queue: list[Envelope] = []
        self._seq = itertools.count()
        self.good_diffuse_calls = 0
        self.bad_diffuse_calls = 0
        self.max_lateness = 0

    def delay(self, message: SignedMessage, recipient: int) -> int:
        d = 0 if self.delay_fn is None else int(self.delay_fn(message, recipient))
        if d < 0 or d > self.config.delta:
            raise DelayViolation(f"delay {d} outside [0, {self.config.delta}]")
        return d

    def diffuse(self, sender: Identity, message: SignedMessage, now: int,
                recipients: Iterable[int] | None = None) -> list[Envelope]:
        if recipients is None:
            recipients = self.live_good()
        if sender.is_good:
            self.good_diffuse_calls += 1
        else:
            self.bad_diffuse_calls += 1
        schedule = []
        for r in recipients:
            env = Envelope(now + self.delay(message, r), next(self._seq), now, r, message)
            heapq.heappush(self._queue, env)
            schedule.append(env)
        return schedule

    def deliver(self, now: int) -> list[Envelope]:
        """Pop everything due by ``now``; records worst lateness seen."""
        out = []
        while self._queue and self._queue[0].deliver_round <= now:
            env = heapq.heappop(self._queue)
            self.max_lateness = max(self.max_lateness, env.deliver_round - env.sent_round)
            out.append(env)
        return out

    def pending(self) -> int:
        return len(self._queue)


def effective_alpha(alpha: float, delta_rounds: int) -> float:
    """Adversary share in a zero-delay network equivalent to ``delta_rounds`` of delay.

    With delay the adversary gets ``2*delta+1`` rounds of hashing per purge,
    while good IDs still get one.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    pooled = 2.0 * alpha * delta_rounds
    return (pooled + alpha) / (pooled + 1.0)


def max_alpha(delta_rounds: int) -> float:
    """Largest admissible adversary share: 1/6 without delay, 1/(10*delta+6) with."""
    return 1.0 / (10 * delta_rounds + 6)
