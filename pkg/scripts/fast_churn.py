"""Max bad fraction of CCom and SybilControl under 10 s sessions with half the rejoins adversarial.

    python scripts/fast_churn.py --seeds 0-29
"""
from _common import parser, write_rows

from ccom.config import parse_seeds
from ccom.suites import fast_churn

args = parser(__doc__.splitlines()[0], "0-29").parse_args()
rows = []
for seed in parse_seeds(args.seeds):
    cc, sc = fast_churn(seed)
    rows.append({"seed": seed, "ccom_max_bad": cc, "sybilcontrol_max_bad": sc})
    print(f"seed {seed}: ccom {cc:.3f}  sybilcontrol {sc:.3f}")
write_rows(f"{args.out}/fast_churn.csv", rows)
