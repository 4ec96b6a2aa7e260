"""ECCom: CCom with a committee-private sample standing in for full departure tracking.

Departures are not announced. The committee instead pings a small sample of
IDs every round and purges once the sample has drifted by a quarter.
"""
from __future__ import annotations

import math

import numpy as np

from . import consensus
from .ccom_engine import CCom, ProtocolParams, _Join
from .consensus import NoGoodMajority
from .election import ElectionResult

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser; uint64 array arithmetic wraps modulo 2**64
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def sample_hash(secret: bytes, keys) -> np.ndarray:
    """Keyed hash of integer IDs into [0, 1). Without ``secret`` the values
    are unpredictable, so the adversary cannot choose which IDs get sampled."""
    if len(secret) < 16:
        raise ValueError("sample key needs at least 16 bytes")
    k0 = np.uint64(int.from_bytes(secret[:8], "big"))
    k1 = np.uint64(int.from_bytes(secret[8:16], "big"))
    x = np.asarray(keys, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        x = _mix(_mix(x ^ k0) ^ k1)
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sample_threshold(n0: int, s_old_size: int, c: float) -> float:
    if s_old_size <= 0:
        raise ValueError("s_old_size must be positive")
    return min(1.0, c * math.log2(n0) / s_old_size)


def sample_membership(key: int, n0: int, s_old_size: int, c: float, secret: bytes) -> bool:
    return bool(sample_hash(secret, [key])[0] <= sample_threshold(n0, s_old_size, c))


def trigger_level(sample_old_size: int, epsilon0: float, delta_rounds: int) -> float:
    """Sample symmetric difference at which a purge fires."""
    return sample_old_size * (0.25 - epsilon0 * delta_rounds)


class ECCom(CCom):
    def __init__(self, params: ProtocolParams, strategy=None, seed=0):
        super().__init__(params, strategy, seed)
        self.sample_key = b""
        self.sample_cut = 1.0
        self.sample_old: set[int] = set()
        self.sample_cur: set[int] = set()
        self.sample_symdiff = 0
        self._sample_new = 0      # sampled IDs in sample_cur but not sample_old
        self._unanswered: set[int] = set()
        self.ping_messages = 0

    # ---- sample maintenance -------------------------------------------
    def _rotate_sample(self):
        try:
            self.sample_key = consensus.generate_seed(self.committee, self.rng, 256)
        except NoGoodMajority:
            self.sample_key = self.rng.bytes(32)
        self.sample_cut = sample_threshold(self.params.n0, max(len(self.s_old), 1), self.params.sample_c)
        live = np.fromiter(self.s_old, dtype=np.int64, count=len(self.s_old))
        hit = live[sample_hash(self.sample_key, live) <= self.sample_cut] if len(live) else live
        self.sample_old = set(hit.tolist())
        self.sample_cur = set(self.sample_old)
        self.sample_symdiff = 0
        self._sample_new = 0
        self._unanswered.clear()

    def _sampled(self, keys) -> np.ndarray:
        return sample_hash(self.sample_key, keys) <= self.sample_cut

    def bootstrap(self, good_keys, bad_count: int = 0):
        super().bootstrap(good_keys, bad_count)
        self._rotate_sample()

    def _after_purge(self, result: ElectionResult):
        rec = self.epochs[-1]
        rec.sample_old_size = self._trigger_sample_old
        rec.sample_symdiff_at_trigger = self._trigger_sample_symdiff
        self._rotate_sample()

    def open_purge(self, now: int):
        self._trigger_sample_old = len(self.sample_old)
        self._trigger_sample_symdiff = self.sample_symdiff
        super().open_purge(now)

    # ---- trigger ------------------------------------------------------
    def sample_level(self) -> float:
        return trigger_level(len(self.sample_old), self.params.epsilon0, self.params.delta_rounds)

    def purge_needed(self) -> bool:
        if not self.sample_old:
            return super().purge_needed()
        return self.sample_symdiff >= self.sample_level()

    def _room_for_bad(self, item: _Join) -> int:
        if not self.sample_old:
            return super()._room_for_bad(item)
        needed = math.ceil(self.sample_level() - self.sample_symdiff)
        if needed <= 0:
            return 0
        hits = np.flatnonzero(self._sampled(np.arange(item.key, item.key + item.count)))
        if len(hits) < needed:
            return item.count
        return int(hits[needed - 1]) + 1

    # ---- population changes -------------------------------------------
    def _admit(self, keys, good: bool):
        super()._admit(keys, good)
        keys = np.asarray(keys, dtype=np.int64)
        hit = keys[self._sampled(keys)].tolist()
        if not good and self.silenced:
            # a silent ID never answers its first ping
            hit = [k for k in hit if k not in self.silenced]
        fresh = [k for k in hit if k not in self.sample_cur]
        self.sample_cur.update(fresh)
        self._sample_new += len(fresh)
        self.sample_symdiff += len(fresh)

    def _announce_departure(self, key: int, good: bool, r: int):
        # no notice is sent; the committee only learns through its pings
        self.s_cur.discard(key)
        if key in self.sample_cur:
            self._unanswered.add(key)

    def ping(self):
        """Ping every sampled ID; non-responders leave ``sample_cur``."""
        union = len(self.sample_old) + self._sample_new
        self.ledger.good_bandwidth += 2 * union
        self.ping_messages += 2 * union
        for key in self._unanswered:
            if key not in self.sample_cur:
                continue
            self.sample_cur.discard(key)
            if key in self.sample_old:
                self.sample_symdiff += 1
            else:
                self._sample_new -= 1
                self.sample_symdiff -= 1
        self._unanswered.clear()

    def _step_admissions(self, r: int):
        self.ping()
        super()._step_admissions(r)

    def _sample_columns(self) -> tuple[int, int]:
        return len(self.sample_cur), self.sample_symdiff
