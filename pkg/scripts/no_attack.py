"""Good compute of CCom relative to SybilControl with no attack.

    python scripts/no_attack.py --seeds 0-19
"""
from _common import parser, write_rows

from ccom.churn import DEBIAN, SKYPE
from ccom.config import parse_seeds
from ccom.suites import no_attack_pct

args = parser(__doc__.splitlines()[0], "0-19").parse_args()
rows = []
for name, model in (("skype", SKYPE), ("debian", DEBIAN)):
    for seed in parse_seeds(args.seeds):
        pct = no_attack_pct(seed, model)
        rows.append({"model": name, "seed": seed, "performance_pct": pct})
        print(f"{name} seed {seed}: {pct:.3f}%")
write_rows(f"{args.out}/no_attack.csv", rows)
