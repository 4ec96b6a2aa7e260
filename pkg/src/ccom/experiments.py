"""Monte-Carlo suites: build engines from a config, run seeds, write CSVs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .adversary import make_strategy
from .ccom_engine import CCom
from .churn import ChurnSchedule, enforce_rate_cap, load_trace, weibull_sessions
from .config import ExperimentConfig
from .eccom_engine import ECCom
from .metrics import (check_committee_goal, check_population_goal, performance_pct, write_csv,
                      write_timeline)
from .sybilcontrol import SybilControl


class MismatchedSeeds(ValueError):
    pass


@dataclass
class RunResult:
    protocol: str
    seed: int
    rounds: int
    epochs: int
    population_goal: bool
    committee_goal: bool
    max_bad_fraction: float
    max_post_purge_bad_fraction: float
    min_committee_good_fraction: float
    committee_failures: int
    good_compute: float
    good_bandwidth: int
    adv_compute: float
    adv_bandwidth: int
    g_new: int

    @property
    def passed(self) -> bool:
        return self.population_goal and self.committee_goal


SUMMARY_COLUMNS = tuple(RunResult.__dataclass_fields__)


def make_engine(cfg: ExperimentConfig, seed: int):
    strategy = make_strategy(cfg.adversary.strategy, **cfg.adversary.params)
    if cfg.protocol == "sybilcontrol":
        return SybilControl(cfg.sybilcontrol_params(), strategy, seed)
    cls = ECCom if cfg.protocol == "eccom" else CCom
    return cls(cfg.protocol_params(), strategy, seed)


def make_schedule(cfg: ExperimentConfig, churn_seed: np.random.SeedSequence) -> ChurnSchedule:
    ch = cfg.churn
    if ch.source == "trace":
        events = load_trace(ch.path)
        initial = sorted(e.key for e in events if e.time == 0 and e.kind == "J" and e.good)
        starters = set(initial)
        rest = [e for e in events if not (e.time == 0 and e.kind == "J" and e.key in starters)]
        schedule = ChurnSchedule(initial, rest)
    else:
        rng = np.random.default_rng(churn_seed)
        schedule = weibull_sessions(ch.session_model(), ch.n_ids, ch.horizon_s, rng,
                                    think_mean_s=ch.think_mean_s, min_population=ch.min_population,
                                    p_bad=ch.p_bad, max_events=ch.max_events, max_joins=ch.max_joins)
    if ch.rate_cap:
        schedule.events, _ = enforce_rate_cap(schedule.events, cfg.epsilon0, cfg.round_seconds,
                                              len(schedule.initial_keys))
    return schedule


def horizon_for(cfg: ExperimentConfig, schedule: ChurnSchedule) -> int:
    if cfg.horizon_rounds is not None:
        return cfg.horizon_rounds
    end = schedule.events[-1].time if schedule.events else 0.0
    if cfg.churn.source == "weibull" and cfg.churn.max_events is None and cfg.churn.max_joins is None:
        end = cfg.churn.horizon_s
    return math.floor(end / cfg.round_seconds) + 1


def run_seed(cfg: ExperimentConfig, seed: int, record: bool = True):
    """One deterministic simulation. Returns (engine, result)."""
    engine = make_engine(cfg, seed)
    schedule = make_schedule(cfg, engine.churn_seed)
    engine.record_timeline = record
    engine.run(schedule, horizon_for(cfg, schedule), cfg.adversary.initial_bad)
    return engine, summarize(cfg, engine, seed)


def summarize(cfg: ExperimentConfig, engine, seed: int) -> RunResult:
    led = engine.ledger
    committee_ok, min_frac = True, 1.0
    if engine.timeline.points:
        pop_ok = check_population_goal(engine.timeline).passed
    else:
        pop_ok = engine.max_bad_fraction < 0.5
    epochs = getattr(engine, "epochs", [])
    if isinstance(engine, CCom):
        if engine.timeline.points:
            check = check_committee_goal(engine.timeline, cfg.n0, cfg.size_lo, cfg.size_hi)
            committee_ok, min_frac = check.passed, check.worst
        else:
            committee_ok = engine.committee_failures == 0
            min_frac = min((e.committee_good_fraction for e in epochs), default=1.0)
    return RunResult(
        protocol=cfg.protocol, seed=seed, rounds=engine.round + 1, epochs=len(epochs),
        population_goal=pop_ok, committee_goal=committee_ok,
        max_bad_fraction=engine.max_bad_fraction,
        max_post_purge_bad_fraction=getattr(engine, "max_post_purge_bad_fraction", 0.0),
        min_committee_good_fraction=min_frac,
        committee_failures=getattr(engine, "committee_failures", 0),
        good_compute=led.good_compute, good_bandwidth=led.good_bandwidth,
        adv_compute=led.adv_compute, adv_bandwidth=led.adv_bandwidth, g_new=led.g_new)


def write_epochs(engine, path: Path):
    epochs = getattr(engine, "epochs", [])
    if not epochs:
        return
    names = list(asdict(epochs[0]))
    write_csv(path, names, [tuple(asdict(e).values()) for e in epochs])


def run_suite(cfg: ExperimentConfig, seeds=None, out: str | Path | None = None,
              log=None) -> list[RunResult]:
    seeds = tuple(cfg.seeds if seeds is None else seeds)
    out_dir = Path(out if out is not None else cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for seed in seeds:
        engine, res = run_seed(cfg, seed, record=cfg.timelines)
        if cfg.timelines:
            write_timeline(engine.timeline, out_dir, prefix=f"seed{seed}_")
        write_epochs(engine, out_dir / f"seed{seed}_epochs.csv")
        results.append(res)
        if log:
            log(format_result(res))
    write_summary(results, out_dir / "summary.csv")
    return results


def write_summary(results: list[RunResult], path: Path):
    write_csv(path, SUMMARY_COLUMNS, [tuple(asdict(r).values()) for r in results])


def format_result(r: RunResult) -> str:
    verdict = "PASS" if r.passed else "FAIL"
    return (f"{r.protocol} seed={r.seed} {verdict} max_bad={r.max_bad_fraction:.4f} "
            f"epochs={r.epochs} good_compute={r.good_compute:.6g} g_new={r.g_new}")


def _churn_signature(cfg: ExperimentConfig):
    return (cfg.churn, cfg.round_seconds, cfg.epsilon0)


def compare(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, seeds=None,
            out: str | Path | None = None, log=None) -> dict:
    """Run both configs on the same seeds; write per-round cost ratios.

    Returns ``{"pct": [...], "mean_pct": float, "results_a": ..., "results_b": ...}``
    where ``pct`` is ``performance_pct(a, b)`` per seed on good compute.
    """
    if seeds is None:
        if cfg_a.seeds != cfg_b.seeds:
            raise MismatchedSeeds(f"seed lists differ: {cfg_a.seeds} vs {cfg_b.seeds}")
        seeds = cfg_a.seeds
    if _churn_signature(cfg_a) != _churn_signature(cfg_b):
        raise MismatchedSeeds("configs do not share a churn source")
    out_dir = Path(out if out is not None else cfg_a.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    pct, res_a, res_b = [], [], []
    for seed in seeds:
        eng_a, ra = run_seed(cfg_a, seed, record=True)
        eng_b, rb = run_seed(cfg_b, seed, record=True)
        res_a.append(ra)
        res_b.append(rb)
        a = dict(zip(eng_a.timeline.ledger_column("round").tolist(),
                     eng_a.timeline.ledger_column("good_compute").tolist()))
        rows = []
        for rnd, cost_b in zip(eng_b.timeline.ledger_column("round").tolist(),
                               eng_b.timeline.ledger_column("good_compute").tolist()):
            cost_a = a.get(rnd)
            if cost_a is None:
                continue
            rows.append((rnd, cost_a, cost_b, cost_a / cost_b if cost_b > 0 else float("nan")))
        write_csv(out_dir / f"seed{seed}_compare.csv",
                  ("round", "good_compute_a", "good_compute_b", "ratio"), rows)
        p = performance_pct(ra.good_compute, rb.good_compute) if rb.good_compute > 0 else float("nan")
        pct.append(p)
        if log:
            log(f"seed={seed} {cfg_a.protocol}={ra.good_compute:.6g} "
                f"{cfg_b.protocol}={rb.good_compute:.6g} performance_pct={p:.3f}")
    write_csv(out_dir / "compare_summary.csv",
              ("seed", "good_compute_a", "good_compute_b", "performance_pct"),
              [(s, ra.good_compute, rb.good_compute, p) for s, ra, rb, p in zip(seeds, res_a, res_b, pct)])
    write_summary(res_a + res_b, out_dir / "summary.csv")
    return {"pct": pct, "mean_pct": float(np.mean(pct)) if pct else float("nan"),
            "results_a": res_a, "results_b": res_b}
