"""Experiment configuration: INI-style ``key = value`` files parsed with configparser.

Fractions such as ``alpha = 1/6`` are accepted anywhere a number is. Every
inter-parameter bound is checked in :func:`validate` before a run starts.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .adversary import STRATEGIES, make_strategy
from .ccom_engine import ANALYTIC, CONCRETE, ProtocolParams
from .churn import SessionModel
from .identity_net import max_alpha
from .puzzles import PuzzleParams
from .sybilcontrol import SybilControlParams

PROTOCOLS = ("ccom", "eccom", "sybilcontrol")
UNIT_SECONDS = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0}


class ConfigInvalid(ValueError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


@dataclass(frozen=True)
class ChurnConfig:
    source: str = "weibull"
    shape: float = 0.38
    scale: float | None = 42.2
    median: float | None = None
    mean: float | None = None
    units: str = "minutes"
    n_ids: int = 1000
    min_population: int = 0
    max_events: int | None = None
    max_joins: int | None = None
    p_bad: float = 0.0
    think_mean_s: float | None = None
    horizon_s: float = 604_970.0
    rate_cap: bool = True
    path: str | None = None

    def session_model(self) -> SessionModel:
        unit = UNIT_SECONDS[self.units]
        if self.median is not None:
            return SessionModel.from_median(self.shape, self.median, unit)
        if self.mean is not None:
            return SessionModel.from_mean(self.shape, self.mean, unit)
        return SessionModel(self.shape, self.scale, unit)


@dataclass(frozen=True)
class AdversaryConfig:
    strategy: str = "idle"
    initial_bad: int = 0
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = "ccom"
    n0: int = 1000
    alpha: float = 1 / 6
    gamma: float = 1.0
    d: int = 20
    epsilon0: float = 0.04
    delta_rounds: int = 0
    round_seconds: float = 5.0
    margin: int = 2
    sample_c: float = 8.0
    strict: bool = False
    test_period_s: float = 5.0
    use_overlay: bool = False
    puzzle: PuzzleParams = PuzzleParams(mu=2**20)
    mode: str = ANALYTIC
    churn: ChurnConfig = ChurnConfig()
    adversary: AdversaryConfig = AdversaryConfig()
    seeds: tuple[int, ...] = tuple(range(20))
    horizon_rounds: int | None = None
    output: str = "out"
    size_lo: float = 1.0
    size_hi: float = 120.0
    timelines: bool = True

    def protocol_params(self) -> ProtocolParams:
        return ProtocolParams(n0=self.n0, alpha=self.alpha, gamma=self.gamma, d=self.d,
                              epsilon0=self.epsilon0, delta_rounds=self.delta_rounds,
                              round_seconds=self.round_seconds, puzzle=self.puzzle,
                              mode=self.mode, margin=self.margin, sample_c=self.sample_c,
                              strict=self.strict)

    def sybilcontrol_params(self) -> SybilControlParams:
        return SybilControlParams(alpha=self.alpha, round_seconds=self.round_seconds,
                                  test_period_s=self.test_period_s, puzzle=self.puzzle,
                                  use_overlay=self.use_overlay, delta_rounds=self.delta_rounds)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def parse_number(text: str) -> float:
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        return float(text)


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0-19"``, ``"1,4,7"`` or a mix such as ``"0-4,10"``."""
    seeds: list[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("empty seed list")
    return tuple(seeds)


def _scalar(text: str):
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    try:
        v = parse_number(low)
    except ValueError:
        return text.strip()
    return int(v) if v.is_integer() and "." not in low and "e" not in low else v


class _Reader:
    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp
        self.used: set[tuple[str, str]] = set()

    def get(self, section: str, key: str, kind, default):
        if not self.cp.has_option(section, key):
            return default
        self.used.add((section, key))
        raw = self.cp.get(section, key)
        name = f"{section}.{key}"
        try:
            if kind is bool:
                v = _scalar(raw)
                if not isinstance(v, bool):
                    raise ValueError(f"expected true/false, got {raw!r}")
                return v
            if kind is int:
                v = parse_number(raw)
                if not v.is_integer():
                    raise ValueError(f"expected an integer, got {raw!r}")
                return int(v)
            if kind is float:
                return parse_number(raw)
            if kind == "optint":
                return None if raw.strip().lower() in ("", "none") else int(parse_number(raw))
            if kind == "optfloat":
                return None if raw.strip().lower() in ("", "none") else parse_number(raw)
            return raw.strip()
        except ValueError as exc:
            raise ConfigInvalid(name, str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigInvalid("path", f"no such file: {path}") from None
    except configparser.Error as exc:
        raise ConfigInvalid("syntax", str(exc)) from None
    return parse_config(cp, base=Path(path).parent)


def loads_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid("syntax", str(exc)) from None
    return parse_config(cp)


def parse_config(cp: configparser.ConfigParser, base: Path | None = None) -> ExperimentConfig:
    try:
        return _parse(cp, base)
    except ConfigInvalid:
        raise
    except ValueError as exc:
        # parameter dataclasses reject bad values in their constructors
        raise ConfigInvalid("config", str(exc)) from None


def _parse(cp: configparser.ConfigParser, base: Path | None) -> ExperimentConfig:
    r = _Reader(cp)
    d = ExperimentConfig()
    pz = d.puzzle
    puzzle = PuzzleParams(mu=r.get("puzzle", "mu", int, pz.mu),
                          delta=r.get("puzzle", "delta", float, pz.delta),
                          big_c=r.get("puzzle", "big_c", float, pz.big_c),
                          rho=r.get("puzzle", "rho", int, pz.rho)) if cp.has_section("puzzle") else pz

    c = ChurnConfig()
    churn = ChurnConfig(
        source=r.get("churn", "source", str, c.source),
        shape=r.get("churn", "shape", float, c.shape),
        scale=r.get("churn", "scale", "optfloat", c.scale),
        median=r.get("churn", "median", "optfloat", c.median),
        mean=r.get("churn", "mean", "optfloat", c.mean),
        units=r.get("churn", "units", str, c.units),
        n_ids=r.get("churn", "n_ids", int, c.n_ids),
        min_population=r.get("churn", "min_population", int, c.min_population),
        max_events=r.get("churn", "max_events", "optint", c.max_events),
        max_joins=r.get("churn", "max_joins", "optint", c.max_joins),
        p_bad=r.get("churn", "p_bad", float, c.p_bad),
        think_mean_s=r.get("churn", "think_mean_s", "optfloat", c.think_mean_s),
        horizon_s=r.get("churn", "horizon_s", float, c.horizon_s),
        rate_cap=r.get("churn", "rate_cap", bool, c.rate_cap),
        path=r.get("churn", "path", str, c.path))
    if churn.path and base is not None and not Path(churn.path).is_absolute():
        churn = replace(churn, path=str(base / churn.path))

    strategy = r.get("adversary", "strategy", str, "idle")
    initial_bad = r.get("adversary", "initial_bad", int, 0)
    extra = {}
    if cp.has_section("adversary"):
        for key, raw in cp.items("adversary"):
            if key not in ("strategy", "initial_bad"):
                extra[key] = _scalar(raw)
    adversary = AdversaryConfig(strategy, initial_bad, extra)

    seeds = d.seeds
    if cp.has_option("run", "seeds"):
        try:
            seeds = parse_seeds(r.get("run", "seeds", str, ""))
        except ValueError as exc:
            raise ConfigInvalid("run.seeds", str(exc)) from None

    cfg = ExperimentConfig(
        protocol=r.get("run", "protocol", str, d.protocol),
        n0=r.get("protocol", "n0", int, d.n0),
        alpha=r.get("protocol", "alpha", float, d.alpha),
        gamma=r.get("protocol", "gamma", float, d.gamma),
        d=r.get("protocol", "d", int, d.d),
        epsilon0=r.get("protocol", "epsilon0", float, d.epsilon0),
        delta_rounds=r.get("protocol", "delta_rounds", int, d.delta_rounds),
        round_seconds=r.get("protocol", "round_seconds", float, d.round_seconds),
        margin=r.get("protocol", "margin", int, d.margin),
        sample_c=r.get("protocol", "sample_c", float, d.sample_c),
        strict=r.get("protocol", "strict", bool, d.strict),
        test_period_s=r.get("protocol", "test_period_s", float, d.test_period_s),
        use_overlay=r.get("protocol", "use_overlay", bool, d.use_overlay),
        puzzle=puzzle,
        mode=r.get("puzzle", "mode", str, d.mode),
        churn=churn,
        adversary=adversary,
        seeds=seeds,
        horizon_rounds=r.get("run", "horizon_rounds", "optint", d.horizon_rounds),
        output=r.get("run", "output", str, d.output),
        size_lo=r.get("goals", "size_lo", float, d.size_lo),
        size_hi=r.get("goals", "size_hi", float, d.size_hi),
        timelines=r.get("run", "timelines", bool, d.timelines))

    for section in cp.sections():
        if section == "adversary":
            continue
        for key in cp.options(section):
            if (section, key) not in r.used:
                raise ConfigInvalid(f"{section}.{key}", "unknown setting")
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Raise :class:`ConfigInvalid` on the first bound that does not hold."""
    if cfg.protocol not in PROTOCOLS:
        raise ConfigInvalid("protocol", f"must be one of {', '.join(PROTOCOLS)}")
    if cfg.mode not in (ANALYTIC, CONCRETE):
        raise ConfigInvalid("mode", f"must be {ANALYTIC} or {CONCRETE}")
    if cfg.n0 < 2:
        raise ConfigInvalid("n0", "must be at least 2")
    if cfg.delta_rounds < 0:
        raise ConfigInvalid("delta_rounds", "must be non-negative")
    if not 0.0 <= cfg.alpha < 1.0:
        raise ConfigInvalid("alpha", "must lie in [0, 1)")
    if cfg.protocol != "sybilcontrol":
        bound = max_alpha(cfg.delta_rounds)
        if cfg.alpha > bound + 1e-12:
            raise ConfigInvalid("alpha", f"{cfg.alpha:g} exceeds 1/(10*delta_rounds+6) = {bound:g} "
                                         f"at delta_rounds={cfg.delta_rounds}")
        if cfg.d < 20 * cfg.gamma:
            raise ConfigInvalid("d", f"must be at least 20*gamma = {20 * cfg.gamma:g}")
    if cfg.gamma <= 0:
        raise ConfigInvalid("gamma", "must be positive")
    if not 0.0 <= cfg.epsilon0 < 0.05:
        raise ConfigInvalid("epsilon0", "must lie in [0, 1/20)")
    if cfg.delta_rounds and 0.25 - cfg.epsilon0 * cfg.delta_rounds <= 0:
        raise ConfigInvalid("epsilon0", "epsilon0 * delta_rounds must stay below 1/4")
    if cfg.round_seconds <= 0:
        raise ConfigInvalid("round_seconds", "must be positive")
    if cfg.sample_c <= 0:
        raise ConfigInvalid("sample_c", "must be positive")
    p = cfg.puzzle
    if p.mu < 2:
        raise ConfigInvalid("puzzle.mu", "must be at least 2")
    if not 0.0 < p.delta < 1.0:
        raise ConfigInvalid("puzzle.delta", "must lie in (0, 1)")
    if p.big_c <= 0 or p.rho < 1:
        raise ConfigInvalid("puzzle", "big_c must be positive and rho at least 1")
    ch = cfg.churn
    if ch.source not in ("weibull", "trace"):
        raise ConfigInvalid("churn.source", "must be weibull or trace")
    if ch.source == "trace" and not ch.path:
        raise ConfigInvalid("churn.path", "a trace source needs a path")
    if ch.source == "weibull":
        if ch.units not in UNIT_SECONDS:
            raise ConfigInvalid("churn.units", f"must be one of {', '.join(UNIT_SECONDS)}")
        if ch.shape <= 0:
            raise ConfigInvalid("churn.shape", "must be positive")
        if ch.median is None and ch.mean is None and (ch.scale is None or ch.scale <= 0):
            raise ConfigInvalid("churn.scale", "give a positive scale, median or mean")
        if ch.n_ids < 1:
            raise ConfigInvalid("churn.n_ids", "must be at least 1")
    if not 0.0 <= ch.p_bad <= 1.0:
        raise ConfigInvalid("churn.p_bad", "must lie in [0, 1]")
    if cfg.horizon_rounds is not None and cfg.horizon_rounds < 1:
        raise ConfigInvalid("run.horizon_rounds", "must be positive")
    if not math.isfinite(cfg.size_lo) or not 0 < cfg.size_lo <= cfg.size_hi:
        raise ConfigInvalid("goals", "need 0 < size_lo <= size_hi")
    if cfg.adversary.strategy not in STRATEGIES:
        raise ConfigInvalid("adversary.strategy", f"unknown strategy; known: {', '.join(sorted(STRATEGIES))}")
    try:
        make_strategy(cfg.adversary.strategy, **cfg.adversary.params)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("adversary", str(exc)) from None
    if cfg.adversary.initial_bad < 0:
        raise ConfigInvalid("adversary.initial_bad", "must be non-negative")
    return cfg
