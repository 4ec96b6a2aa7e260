"""Good cost against adversary cost plus good joins, over join-attack multipliers.

    python scripts/cost_sweep.py --seeds 0-4
"""
import math

from _common import parser, write_rows

from ccom.config import parse_seeds
from ccom.suites import cost_fits, cost_point

ap = parser(__doc__.splitlines()[0], "0-4")
ap.add_argument("--multipliers", default="0,1,2,4,8,16")
args = ap.parse_args()
points = [cost_point(seed, float(m)) for m in args.multipliers.split(",")
          for seed in parse_seeds(args.seeds)]
compute, bandwidth = cost_fits(points)
print(f"compute:   slope {compute.slope:.3f}  R^2 {compute.r2:.4f}")
print(f"bandwidth: slope {bandwidth.slope:.3f}  R^2 {bandwidth.r2:.4f}  (log2(n0)^2 = {math.log2(1000) ** 2:.1f})")
for q in points:
    if q.multiplier == 0:
        print(f"seed {q.seed} no attack: good compute / g_new = {q.good_compute / q.g_new:.3f}")
write_rows(f"{args.out}/cost_sweep.csv", points)
