"""Membership-interval committee election.

Interval ``k >= 1`` is ``(2**(-(k+1)/d), 2**(-k/d)]``. The ID holding the
smallest purge-round hash value inside an interval wins that interval's seat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np


def interval_bounds(k: int, d: int) -> tuple[float, float]:
    return 2.0 ** (-(k + 1) / d), 2.0 ** (-k / d)


def interval_index(value: float, d: int) -> int | None:
    if not 0.0 < value < 1.0:
        raise ValueError("value must lie in (0, 1)")
    k = math.floor(-d * math.log2(value))
    # floor of a rounded log can be off by one at the boundaries
    while k > 0 and value > 2.0 ** (-k / d):
        k -= 1
    while value <= 2.0 ** (-(k + 1) / d):
        k += 1
    return k if k >= 1 else None


def _interval_indices(values: np.ndarray, d: int) -> np.ndarray:
    """Vector version of :func:`interval_index`; 0 marks "no interval"."""
    with np.errstate(divide="ignore"):
        k = np.floor(-d * np.log2(values)).astype(np.int64)
    k = np.maximum(k, 0)
    too_big = values > np.exp2(-k / d)
    k[too_big] -= 1
    too_small = values <= np.exp2(-(k + 1) / d)
    k[too_small] += 1
    k[values <= 0.0] = 0
    return np.maximum(k, 0)


@dataclass(frozen=True)
class ElectionResult:
    intervals: np.ndarray  # occupied interval indices, ascending
    keys: np.ndarray       # winning key for each of those intervals

    @property
    def winners(self) -> dict[int, int]:
        return {int(k): int(v) for k, v in zip(self.intervals, self.keys)}

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(np.unique(self.keys).tolist())

    @property
    def seats(self) -> int:
        return len(self.intervals)


def _empty() -> ElectionResult:
    return ElectionResult(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


def elect_committee(solutions: Mapping[int, Sequence[float]], d: int) -> ElectionResult:
    """Smallest value per interval wins; equal values go to the smaller key."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    keys, vals = [], []
    for key, values in solutions.items():
        keys.extend([key] * len(values))
        vals.extend(values)
    if not vals:
        return _empty()
    keys_a = np.asarray(keys, dtype=np.int64)
    vals_a = np.asarray(vals, dtype=np.float64)
    ks = _interval_indices(vals_a, d)
    keep = ks >= 1
    keys_a, vals_a, ks = keys_a[keep], vals_a[keep], ks[keep]
    order = np.lexsort((keys_a, vals_a, ks))
    ks_sorted = ks[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = ks_sorted[1:] != ks_sorted[:-1]
    idx = order[first]
    return ElectionResult(ks[idx], keys_a[idx])


@lru_cache(maxsize=64)
def _interval_probs(d: int, k_max: int) -> np.ndarray:
    k = np.arange(1, k_max + 1, dtype=np.float64)
    widths = np.exp2(-k / d) - np.exp2(-(k + 1) / d)
    return np.append(widths, max(0.0, 1.0 - widths.sum()))


def sample_election(keys: np.ndarray, evals: np.ndarray, d: int,
                    rng: np.random.Generator) -> ElectionResult:
    """Draw the election outcome without materialising hash values.

    Interval occupancy is multinomial over the total evaluation count. Each
    occupied interval's minimum belongs to an ID with probability
    proportional to that ID's evaluations; intervals are treated as
    independent, which is exact up to sampling without replacement.
    """
    evals = np.asarray(evals, dtype=np.int64)
    total = int(evals.sum())
    if total <= 0:
        return _empty()
    k_max = math.ceil(d * (math.log2(total) + 40))
    counts = rng.multinomial(total, _interval_probs(d, k_max))[:-1]
    occupied = np.flatnonzero(counts) + 1
    cum = np.cumsum(evals)
    picks = np.searchsorted(cum, rng.random(len(occupied)) * total, side="right")
    picks = np.minimum(picks, len(keys) - 1)
    return ElectionResult(occupied, np.asarray(keys)[picks])


def formation_records(rng: np.random.Generator, candidates: int) -> int:
    """Per-edge forwards of a running minimum over ``candidates`` arrivals.

    The i-th arrival is a new record with probability 1/i, so the mean is the
    harmonic number H(candidates), about ln(candidates).
    """
    if candidates <= 0:
        return 0
    return int((rng.random(candidates) * np.arange(1, candidates + 1) < 1.0).sum())
