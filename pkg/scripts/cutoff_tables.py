"""Write a CSV table and an audit line for every cut-off family.

    python3 scripts/cutoff_tables.py [out_dir] [--delta 4] [--n 41]
"""
import argparse
import csv
from pathlib import Path

from orlicz_mpa.cutoff import KINDS, CutoffFamily, cutoff_table, verify_cutoff


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="out/cutoff")
    ap.add_argument("--delta", type=float, default=4.0)
    ap.add_argument("--n", type=int, default=41)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind in KINDS:
        fam = CutoffFamily(kind, args.delta)
        with open(out / f"{kind}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "s", "rho", "rho_t", "rho_s"])
            for row in cutoff_table(fam, args.n):
                w.writerow([repr(float(v)) for v in row])
        print(verify_cutoff(fam).line())


if __name__ == "__main__":
    main()
