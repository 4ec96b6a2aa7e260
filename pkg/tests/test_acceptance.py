"""Monte-Carlo acceptance suite; one verdict line per criterion.

Runs in roughly half an hour on one core. Deselect with ``-m 'not acceptance'``.
"""
import filecmp
import math
from pathlib import Path

import numpy as np
import pytest

from ccom import suites
from ccom.churn import DEBIAN, SKYPE
from ccom.cli import main
from ccom.config import ConfigInvalid, loads_config, validate
from ccom.puzzles import PuzzleParams

pytestmark = pytest.mark.acceptance

SEEDS = range(20)
ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def burst():
    return [suites.burst_run(s) for s in SEEDS]


@pytest.fixture(scope="module")
def seat_grab():
    return [suites.burst_run(s, seat_grab=True) for s in SEEDS]


@pytest.fixture(scope="module")
def cost_sweep():
    return [suites.cost_point(s, m) for s in range(5) for m in (0, 1, 2, 4, 8, 16)]


@pytest.fixture(scope="module")
def eccom():
    return [suites.eccom_run(s) for s in SEEDS]


def test_population_goal(burst, criterion):
    worst = max(r.max_bad_fraction for r in burst)
    ok = sum(r.max_bad_fraction < 0.5 for r in burst)
    slow = max(r.seconds for r in burst)
    assert criterion("1 population goal", ok == 20 and slow < 120,
                     f"{ok}/20 seeds below 1/2, worst {worst:.4f}, slowest seed {slow:.0f}s")


def test_epoch_bound(burst, criterion):
    worst = max(r.max_post_purge_bad_fraction for r in burst)
    epochs = sum(r.epochs for r in burst)
    assert criterion("2 epoch bound", worst < 1 / 3,
                     f"worst post-purge bad fraction {worst:.4f} over {epochs} epochs")


def test_committee_goal(seat_grab, criterion):
    majority = sum(r.all_epochs_majority for r in seat_grab)
    epochs = np.array([r.epochs for r in seat_grab])
    share = float(np.dot([r.share_epochs_seven_tenths for r in seat_grab], epochs) / epochs.sum())
    small = np.mean([suites.committee_size(s, 1000) for s in range(5)])
    large = np.mean([suites.committee_size(s, 10_000) for s in range(5)])
    growth = large / small
    assert criterion("3 committee goal", majority >= 19 and share >= 0.9 and growth <= 2,
                     f"majority in {majority}/20 seeds, {share:.1%} of epochs >= 7/10 good, "
                     f"size {small:.0f} -> {large:.0f} (x{growth:.2f}) for n0 x10")


def test_compute_commensurate(cost_sweep, criterion):
    fit, _ = suites.cost_fits(cost_sweep)
    ratios = [q.good_compute / q.g_new for q in cost_sweep if q.multiplier == 0]
    assert criterion("4 compute commensurate", fit.r2 >= 0.9 and max(ratios) <= 5,
                     f"R2 {fit.r2:.4f}, slope {fit.slope:.3f}, budget-0 cost/g_new max {max(ratios):.2f}")


def test_bandwidth_commensurate(cost_sweep, criterion):
    _, fit = suites.cost_fits(cost_sweep)
    allowance = 5 * math.log2(1000) ** 2
    ratios = [q.good_bandwidth / q.g_new for q in cost_sweep if q.multiplier == 0]
    assert criterion("5 bandwidth commensurate", fit.r2 >= 0.9 and max(ratios) <= allowance,
                     f"R2 {fit.r2:.4f}, slope {fit.slope:.3f}, budget-0 diffuse/g_new max "
                     f"{max(ratios):.2f} (allowance {allowance:.0f})")


def test_eccom_trigger_bounds(eccom, criterion):
    ok = sum(r.bounds_hold for r in eccom)
    sound = sum(r.soundness_violations for r in eccom)
    live = sum(r.liveness_violations for r in eccom)
    epochs = sum(r.epochs for r in eccom)
    assert criterion("6 eccom trigger bounds", ok >= 18,
                     f"{ok}/20 seeds clean; {sound} soundness and {live} liveness violations in "
                     f"{epochs} epochs; churn range [{min(r.min_churn_at_trigger for r in eccom):.3f}, "
                     f"{max(r.max_churn for r in eccom):.3f}]")


def test_eccom_cost_factor(eccom, criterion):
    ratios = [r.eccom_compute / r.ccom_compute for r in eccom]
    assert criterion("7 eccom cost factor", max(ratios) <= 2.2,
                     f"eccom/ccom good compute in [{min(ratios):.3f}, {max(ratios):.3f}]")


def test_no_attack_comparison(criterion):
    skype = np.array([suites.no_attack_pct(s, SKYPE) for s in SEEDS])
    debian = np.array([suites.no_attack_pct(s, DEBIAN) for s in SEEDS])
    assert criterion("8 no-attack comparison", skype.mean() >= 95 and debian.mean() >= 20,
                     f"skype {skype.mean():.2f}% (min {skype.min():.2f}), "
                     f"debian {debian.mean():.2f}% (min {debian.min():.2f}; reference value 34.5)")


def test_fast_churn_divergence(criterion):
    runs = [suites.fast_churn(s) for s in range(30)]
    ok = sum(cc < 0.5 < sc for cc, sc in runs)
    assert criterion("9 fast churn divergence", ok >= 25,
                     f"{ok}/30 runs diverge; ccom max {max(r[0] for r in runs):.3f}, "
                     f"sybilcontrol min {min(r[1] for r in runs):.3f}")


def test_puzzle_concentration(criterion):
    params = PuzzleParams(mu=2**10)
    target = (1 - params.delta) * params.mu
    concrete = suites.concrete_costs(params, 10_000, seed=0)
    analytic = suites.analytic_costs(params, 100_000, seed=1)
    mean_err = abs(concrete[:1000].mean() / target - 1)
    mean_gap = abs(concrete.mean() / analytic.mean() - 1)
    var_gap = abs(concrete.var() / analytic.var() - 1)
    assert criterion("10 puzzle concentration", mean_err <= 0.05 and mean_gap <= 0.05 and var_gap <= 0.05,
                     f"mean of 1000 concrete solves {concrete[:1000].mean():.1f} vs {target:.1f}; "
                     f"modes differ by {mean_gap:.2%} in mean, {var_gap:.2%} in variance")


def test_bounded_latency(criterion):
    pairs = np.array([suites.latency_pair(s) for s in SEEDS])
    gap = abs(pairs[:, 0].mean() - pairs[:, 1].mean())
    text = "[protocol]\nalpha = 0.07\ndelta_rounds = 1\n"
    try:
        validate(loads_config(text))
        rejected = False
    except ConfigInvalid:
        rejected = True
    assert criterion("11 bounded latency", gap <= 0.03 and rejected,
                     f"seat share {pairs[:, 0].mean():.4f} at delta 1 vs {pairs[:, 1].mean():.4f} "
                     f"at effective alpha, gap {gap * 100:.2f} pp; alpha 0.07 rejected: {rejected}")


def test_determinism(tmp_path, criterion):
    configs = sorted((ROOT / "configs").glob("*.ini"))
    diverged = []
    for cfg in configs:
        outs = [tmp_path / cfg.stem / k for k in ("a", "b")]
        for out in outs:
            main(["run", str(cfg), "--seeds", "0", "--out", str(out)])
        names = sorted(p.name for p in outs[0].iterdir())
        _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
        if mismatch or errors or not names:
            diverged.append(cfg.stem)
    assert criterion("12 determinism", not diverged,
                     f"{len(configs) - len(diverged)}/{len(configs)} configs byte-identical on rerun"
                     + (f"; diverged: {', '.join(diverged)}" if diverged else ""))
