"""Burst attack at n0 = 1000: bad fraction, post-purge fraction and committee health.

    python scripts/population_goal.py --seeds 0-19 [--seat-grab]
"""
from _common import parser, write_rows

from ccom.config import parse_seeds
from ccom.suites import burst_run

ap = parser(__doc__.splitlines()[0], "0-19")
ap.add_argument("--seat-grab", action="store_true")
args = ap.parse_args()
rows = []
for seed in parse_seeds(args.seeds):
    r = burst_run(seed, seat_grab=args.seat_grab)
    rows.append(r)
    print(f"seed {seed}: max bad {r.max_bad_fraction:.4f}, after purge {r.max_post_purge_bad_fraction:.4f}, "
          f"epochs {r.epochs}, committee >= 7/10 in {100 * r.share_epochs_seven_tenths:.1f}% ({r.seconds:.1f}s)")
tag = "seatgrab" if args.seat_grab else "burst"
write_rows(f"{args.out}/population_goal_{tag}.csv", rows)
