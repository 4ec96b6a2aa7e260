"""Committee-side primitives: agreement oracle, seed generation, roster dissemination.

Agreement is an oracle, not a message-level BFT protocol. It returns what a
correct protocol would return under a good majority and charges the usual
quadratic message count.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np


class NoGoodMajority(RuntimeError):
    pass


class EmptyCommittee(RuntimeError):
    pass


@dataclass(frozen=True)
class Committee:
    members: tuple[int, ...]
    epoch: int
    formed_at: int
    good_members: frozenset[int] = field(default=frozenset(), repr=False)
    # interval winners before deduplication; an ID winning two intervals
    # holds one seat but counts twice here
    seats: int = 0

    def __post_init__(self):
        if not self.members:
            raise EmptyCommittee("committee has no members")
        ids = frozenset(self.members)
        if len(ids) != len(self.members):
            raise ValueError("duplicate committee members")
        if not self.good_members <= ids:
            raise ValueError("good_members must be a subset of members")

    @classmethod
    def build(cls, members: Iterable[int], good: set[int] | frozenset[int], epoch: int,
              formed_at: int, seats: int | None = None) -> "Committee":
        members = tuple(sorted(set(members)))
        goodset = frozenset(m for m in members if m in good)
        return cls(members, epoch, formed_at, goodset,
                   len(members) if seats is None else seats)

    def __len__(self):
        return len(self.members)

    @property
    def good_count(self) -> int:
        return len(self.good_members)

    @property
    def bad_count(self) -> int:
        return len(self.members) - len(self.good_members)

    @property
    def good_fraction(self) -> float:
        return self.good_count / len(self.members)

    def has_good_majority(self, departed: Iterable[int] = ()) -> bool:
        """Strict majority of good members; departed good members no longer count."""
        gone = len(self.good_members & frozenset(departed))
        return self.good_count - gone > self.bad_count


def agree(committee: Committee, proposals: Mapping[int, Hashable]) -> tuple[Hashable, int]:
    """Return (decision, messages charged).

    The decision is the most common value among good members' proposals;
    ties go to the smallest value so the oracle stays deterministic.
    """
    if not committee.has_good_majority():
        raise NoGoodMajority(f"epoch {committee.epoch}: {committee.good_count} good of {len(committee)}")
    votes = Counter(v for k, v in proposals.items() if k in committee.good_members)
    if not votes:
        raise ValueError("no good member proposed a value")
    top = max(votes.values())
    decision = min((v for v, n in votes.items() if n == top), key=repr)
    return decision, len(committee) ** 2


def seed_length_bits(n0: int, gamma: float) -> int:
    return math.ceil(gamma * math.log2(n0)) + 64


def generate_seed(committee: Committee, rng: np.random.Generator, length_bits: int) -> bytes:
    """Fresh committee randomness; unused high bits of the first byte are zeroed."""
    if not committee.has_good_majority():
        raise NoGoodMajority(f"epoch {committee.epoch}: cannot agree on a seed")
    nbytes = -(-length_bits // 8)
    raw = bytearray(rng.bytes(nbytes))
    spare = nbytes * 8 - length_bits
    if spare:
        raw[0] &= 0xFF >> spare
    return bytes(raw)


@dataclass(frozen=True)
class Dissemination:
    adopted: tuple[int, ...]
    good_diffuse_calls: int
    bad_diffuse_calls: int
    agreed: bool


def disseminate_committee(new_members: Iterable[int], outgoing: Committee,
                          forged: Iterable[int] | None = None,
                          departed: Iterable[int] = ()) -> Dissemination:
    """Every live outgoing member diffuses its view; receivers keep the majority.

    Good members send ``new_members``. Bad members send ``forged`` (or the
    true roster when ``forged`` is None). Ties are resolved in favour of the
    forged view, which is the pessimistic choice.
    """
    true_view = tuple(sorted(set(new_members)))
    forged_view = true_view if forged is None else tuple(sorted(set(forged)))
    gone = frozenset(departed)
    good_live = len(outgoing.good_members - gone)
    bad = outgoing.bad_count
    if forged_view == true_view or good_live > bad:
        adopted = true_view
    else:
        adopted = forged_view
    return Dissemination(adopted, good_live, bad, adopted == true_view)
