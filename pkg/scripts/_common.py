import argparse
import csv
from dataclasses import asdict
from pathlib import Path


def parser(description: str, seeds: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--seeds", default=seeds, help='e.g. "0-19"')
    ap.add_argument("--out", default="out", help="directory for the CSV")
    return ap


def write_rows(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [asdict(r) if hasattr(r, "__dataclass_fields__") else r for r in rows]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {path}")
