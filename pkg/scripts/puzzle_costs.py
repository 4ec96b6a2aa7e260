"""Concrete against analytic puzzle solving cost at mu = 2^10.

    python scripts/puzzle_costs.py --solves 1000
"""
import argparse

from ccom.puzzles import PuzzleParams
from ccom.suites import analytic_costs, concrete_costs

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--solves", type=int, default=1000)
args = ap.parse_args()
p = PuzzleParams(mu=2**10)
c = concrete_costs(p, args.solves)
a = analytic_costs(p, 100 * args.solves)
print(f"target (1-delta)mu = {(1 - p.delta) * p.mu:.1f}")
print(f"concrete mean {c.mean():.1f} var {c.var():.1f}")
print(f"analytic mean {a.mean():.1f} var {a.var():.1f}")
