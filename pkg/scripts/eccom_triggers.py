"""ECCom sample trigger against true churn, and its cost next to CCom, at n0 = 10,000.

    python scripts/eccom_triggers.py --seeds 0-19 --sample-c 8
"""
from _common import parser, write_rows

from ccom.config import parse_seeds
from ccom.suites import eccom_run

ap = parser(__doc__.splitlines()[0], "0-19")
ap.add_argument("--sample-c", type=float, default=8.0)
args = ap.parse_args()
rows = []
for seed in parse_seeds(args.seeds):
    r = eccom_run(seed, sample_c=args.sample_c)
    rows.append(r)
    print(f"seed {seed}: {r.epochs} epochs, churn max {r.max_churn:.3f}, min at trigger "
          f"{r.min_churn_at_trigger:.3f}, cost ratio {r.eccom_compute / r.ccom_compute:.3f}")
print(f"bounds held in {sum(r.bounds_hold for r in rows)}/{len(rows)} seeds")
write_rows(f"{args.out}/eccom_triggers_c{args.sample_c:g}.csv", rows)
