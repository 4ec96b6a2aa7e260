"""Cost ledgers, per-round timelines, goal checks and comparison statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass
class CostLedger:
    """Cumulative costs. Compute is in puzzle units: one 1-round puzzle is 1."""

    good_entrance: float = 0.0
    good_purge: float = 0.0
    good_verify: float = 0.0
    good_bandwidth: int = 0      # Diffuse calls (and Diffuse-equivalents)
    good_bc_messages: int = 0    # point-to-point messages inside the committee
    adv_evals: int = 0           # raw hash evaluations
    adv_compute: float = 0.0
    adv_bandwidth: int = 0
    g_new: int = 0

    @property
    def good_compute(self) -> float:
        return self.good_entrance + self.good_purge + self.good_verify

    def row(self) -> tuple:
        return (self.good_entrance, self.good_purge, self.good_verify, self.good_compute,
                self.good_bandwidth, self.good_bc_messages, self.adv_compute,
                self.adv_bandwidth, self.g_new)


LEDGER_COLUMNS = ("round", "good_entrance", "good_purge", "good_verify", "good_compute",
                  "good_bandwidth", "good_bc_messages", "adv_compute", "adv_bandwidth", "g_new")

TIMELINE_COLUMNS = ("round", "time_s", "system_size", "good", "bad", "bad_fraction",
                    "max_bad_fraction", "epoch", "committee_size", "committee_seats",
                    "committee_good_fraction", "roster_agreed", "sample_size", "sample_symdiff")


class Timeline:
    """Append-only per-round record. Rounds with no activity may be skipped;
    state is constant across them."""

    def __init__(self):
        self.points: list[tuple] = []
        self.ledger: list[tuple] = []

    def record(self, point: tuple, ledger: CostLedger):
        self.points.append(point)
        self.ledger.append((point[0],) + ledger.row())

    def column(self, name: str) -> np.ndarray:
        i = TIMELINE_COLUMNS.index(name)
        return np.array([p[i] for p in self.points])

    def ledger_column(self, name: str) -> np.ndarray:
        i = LEDGER_COLUMNS.index(name)
        return np.array([p[i] for p in self.ledger])


@dataclass(frozen=True)
class GoalCheck:
    passed: bool
    first_violation: int | None = None
    worst: float | None = None

    def __bool__(self):
        return self.passed


def check_population_goal(timeline: Timeline) -> GoalCheck:
    """Bad fraction strictly below one half at every recorded instant."""
    if not timeline.points:
        return GoalCheck(True)
    peak = timeline.column("max_bad_fraction")
    rounds = timeline.column("round")
    bad = np.flatnonzero(peak >= 0.5)
    worst = float(peak.max())
    if len(bad):
        return GoalCheck(False, int(rounds[bad[0]]), worst)
    return GoalCheck(True, None, worst)


def committee_size_bounds(n0: int, size_lo: float, size_hi: float) -> tuple[float, float]:
    lg = math.log2(n0)
    return size_lo * lg, size_hi * lg


def check_committee_goal(timeline: Timeline, n0: int, size_lo: float = 1.0,
                         size_hi: float = 120.0) -> GoalCheck:
    """Identical roster, strict good majority, and seat count within
    ``[size_lo, size_hi] * log2(n0)`` at every recorded round."""
    if not timeline.points:
        return GoalCheck(True)
    lo, hi = committee_size_bounds(n0, size_lo, size_hi)
    frac = timeline.column("committee_good_fraction")
    seats = timeline.column("committee_seats")
    agreed = timeline.column("roster_agreed")
    rounds = timeline.column("round")
    ok = (frac > 0.5) & (seats >= lo) & (seats <= hi) & (agreed == 1)
    bad = np.flatnonzero(~ok)
    worst = float(frac.min())
    if len(bad):
        return GoalCheck(False, int(rounds[bad[0]]), worst)
    return GoalCheck(True, None, worst)


def majority_ok(good: int, bad: int) -> bool:
    return good > bad


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float
    n: int


def commensurateness(x: Sequence[float], y: Sequence[float]) -> Fit:
    """Least-squares line of ``y`` on ``x`` with its coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two points")
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return Fit(float(slope), float(intercept), r2, len(x))


def performance_pct(ccom_cost: float, sc_cost: float) -> float:
    if sc_cost <= 0:
        raise ValueError("sybilcontrol cost must be positive")
    return 100.0 * (1.0 - ccom_cost / sc_cost)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def write_csv(path: str | Path, header: Iterable[str], rows: Iterable[Sequence]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_timeline(timeline: Timeline, directory: str | Path, prefix: str = ""):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(directory / f"{prefix}timeline.csv", TIMELINE_COLUMNS, timeline.points)
    write_csv(directory / f"{prefix}ledger.csv", LEDGER_COLUMNS, timeline.ledger)


def dataclass_rows(items: Sequence) -> tuple[list[str], list[tuple]]:
    if not items:
        return [], []
    names = [f.name for f in fields(items[0])]
    return names, [tuple(asdict(it)[n] for n in names) for it in items]
