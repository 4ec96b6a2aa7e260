"""Seat share of a seat-grabbing adversary at delta_rounds = 1 against its zero-latency equivalent.

    python scripts/latency.py --seeds 0-19 --alpha 0.0625
"""
from _common import parser, write_rows

from ccom.config import parse_seeds
from ccom.identity_net import effective_alpha
from ccom.suites import latency_pair

ap = parser(__doc__.splitlines()[0], "0-19")
ap.add_argument("--alpha", type=float, default=1 / 16)
args = ap.parse_args()
rows = []
for seed in parse_seeds(args.seeds):
    slow, eq = latency_pair(seed, args.alpha, 1)
    rows.append({"seed": seed, "delta1": slow, "delta0_equivalent": eq})
    print(f"seed {seed}: delta=1 {slow:.4f}  delta=0 at alpha {effective_alpha(args.alpha, 1):.4f}: {eq:.4f}")
write_rows(f"{args.out}/latency.csv", rows)
