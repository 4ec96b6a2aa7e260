"""Proof-of-work puzzles: construction, solving, verification.

A rho-round puzzle asks for ``ell = ceil(C * log2(mu))`` distinct nonces whose
oracle hash falls at or below ``theta = C*log2(mu) / (rho*(1-delta)*mu)``.
The expected number of hash evaluations to solve one is ``ell/theta``, which
is ``rho*(1-delta)*mu`` when ``C*log2(mu)`` is integral.

Two solving modes exist. Concrete mode really hashes (SHA-256 truncated to
64 bits). Analytic mode draws the negative-binomial number of trials that the
concrete search would have taken, which is what large simulations use.
"""
from __future__ import annotations

import enum
import hashlib
import hmac
import math
import struct
from dataclasses import dataclass, field

import numpy as np

_TWO64 = float(2**64)


def oracle_hash(data: bytes) -> float:
    """Random-oracle stand-in: SHA-256, first 64 bits, as a fraction of 2**64."""
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big") / _TWO64


def keyed_hash(key: bytes, data: bytes) -> float:
    """Keyed variant of :func:`oracle_hash`; unpredictable without ``key``."""
    return int.from_bytes(hmac.new(key, data, hashlib.sha256).digest()[:8], "big") / _TWO64


@dataclass(frozen=True)
class PuzzleParams:
    mu: int = 2**10
    delta: float = 0.1
    big_c: float = 1.0
    rho: int = 1

    def __post_init__(self):
        if self.mu < 2:
            raise ValueError("mu must be at least 2")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.big_c <= 0:
            raise ValueError("big_c must be positive")
        if self.rho < 1:
            raise ValueError("rho must be a positive integer")
        if not 0.0 < self.theta <= 1.0 + 1e-12:
            raise ValueError(f"per-solution threshold {self.theta} not in (0, 1]")

    @property
    def ell(self) -> int:
        return max(1, math.ceil(self.big_c * math.log2(self.mu) - 1e-12))

    @property
    def theta(self) -> float:
        return self.big_c * math.log2(self.mu) / (self.rho * (1.0 - self.delta) * self.mu)

    @property
    def tau(self) -> float:
        """Per-solution difficulty (expected trials per accepted nonce)."""
        return 1.0 / self.theta

    @property
    def expected_evals(self) -> float:
        return self.ell / self.theta


@dataclass(frozen=True)
class PuzzleBinding:
    """What a solution is tied to: the solver's key plus a timestamp or a seed."""

    key: int
    timestamp: int | None = None
    seed: bytes | None = None

    def __post_init__(self):
        if (self.timestamp is None) == (self.seed is None):
            raise ValueError("binding needs exactly one of timestamp or seed")

    @classmethod
    def entrance(cls, key: int, timestamp: int) -> "PuzzleBinding":
        return cls(key=key, timestamp=timestamp)

    @classmethod
    def purge(cls, key: int, seed: bytes) -> "PuzzleBinding":
        return cls(key=key, seed=bytes(seed))

    def seed_bytes(self) -> bytes:
        if self.seed is not None:
            return b"R" + self.seed
        return b"T" + struct.pack(">q", self.timestamp)


def encode(binding: PuzzleBinding, nonce: int) -> bytes:
    """Length-prefixed ``key || nonce || seed`` so no two bindings share an input."""
    parts = (struct.pack(">Q", binding.key), struct.pack(">Q", nonce), binding.seed_bytes())
    return b"".join(struct.pack(">I", len(p)) + p for p in parts)


@dataclass(frozen=True)
class PuzzleSolution:
    binding: PuzzleBinding
    nonces: tuple[int, ...]
    hash_evals_spent: int
    # every hash value computed during the search, in search order; only kept
    # when the caller asks for it (committee election needs it)
    trace: tuple[float, ...] = field(default=(), repr=False, compare=False)


class Exhausted(Exception):
    """The solver ran out of hash evaluations before finding ``ell`` nonces."""

    def __init__(self, spent: int, found: int, trace: tuple[float, ...] = ()):
        super().__init__(f"budget exhausted after {spent} evaluations ({found} solutions found)")
        self.spent = spent
        self.found = found
        self.trace = trace


def solve_puzzle(
    params: PuzzleParams,
    binding: PuzzleBinding,
    budget: int,
    rng: np.random.Generator | None = None,
    start: int | None = None,
    keep_trace: bool = False,
) -> PuzzleSolution:
    """Search nonces sequentially from a random (or given) offset.

    Raises :class:`Exhausted` when ``budget`` evaluations pass without
    ``ell`` hits.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if start is None:
        rng = rng if rng is not None else np.random.default_rng()
        start = int(rng.integers(0, 2**62))
    theta, ell = params.theta, params.ell
    nonces: list[int] = []
    trace: list[float] = []
    spent = 0
    nonce = start
    while spent < budget:
        value = oracle_hash(encode(binding, nonce))
        spent += 1
        if keep_trace:
            trace.append(value)
        if value <= theta:
            nonces.append(nonce)
            if len(nonces) == ell:
                return PuzzleSolution(binding, tuple(nonces), spent, tuple(trace))
        nonce = (nonce + 1) % 2**64
    raise Exhausted(spent, len(nonces), tuple(trace))


class InvalidReason(enum.Enum):
    WRONG_COUNT = "WrongCount"
    ABOVE_THRESHOLD = "AboveThreshold"
    WRONG_BINDING = "WrongBinding"
    STALE_TIMESTAMP = "StaleTimestamp"


@dataclass(frozen=True)
class Verdict:
    reason: InvalidReason | None
    hash_evals: int

    @property
    def valid(self) -> bool:
        return self.reason is None

    def __bool__(self):
        return self.valid


def verify_solution(
    params: PuzzleParams,
    solution: PuzzleSolution,
    expected: PuzzleBinding,
    now: int | None = None,
    margin: int = 2,
) -> Verdict:
    """Check count, binding, freshness and every sub-solution's hash.

    Costs at most ``ell`` evaluations; cheaper rejections cost nothing.
    """
    ell = params.ell
    if len(solution.nonces) != ell or len(set(solution.nonces)) != ell:
        return Verdict(InvalidReason.WRONG_COUNT, 0)
    if solution.binding != expected:
        return Verdict(InvalidReason.WRONG_BINDING, 0)
    if solution.binding.timestamp is not None and now is not None:
        if abs(now - solution.binding.timestamp) > margin:
            return Verdict(InvalidReason.STALE_TIMESTAMP, 0)
    theta = params.theta
    for i, nonce in enumerate(solution.nonces):
        if oracle_hash(encode(expected, nonce)) > theta:
            return Verdict(InvalidReason.ABOVE_THRESHOLD, i + 1)
    return Verdict(None, ell)


def analytic_solve_cost(params: PuzzleParams, rng: np.random.Generator, size=None):
    """Trials until the ell-th success of Bernoulli(theta), i.e. negative binomial.

    numpy counts failures only, so ``ell`` is added back.
    """
    ell, theta = params.ell, params.theta
    if theta >= 1.0:
        return ell if size is None else np.full(size, ell, dtype=np.int64)
    return rng.negative_binomial(ell, theta, size=size) + ell


def analytic_batch_cost(params: PuzzleParams, rng: np.random.Generator, count: int) -> int:
    """Total evaluations for ``count`` independent solves (a single NB draw)."""
    if count <= 0:
        return 0
    ell, theta = params.ell, params.theta
    if theta >= 1.0:
        return ell * count
    return int(rng.negative_binomial(ell * count, theta)) + ell * count
