"""Run the desk-scale lambda sweep and print the table and the fitted slope.

    python3 scripts/desk_sweep.py [config.ini] [--workers N]
"""
import argparse
from pathlib import Path

import numpy as np

from orlicz_mpa.cli import run_sweep, sweep_csv, sweep_summary
from orlicz_mpa.config import load_config, resolve
from orlicz_mpa.moser import envelope_slope

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?", default=str(HERE.parent / "configs" / "desk_scalar.ini"))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = load_config(args.config)
    res = resolve(cfg)
    rows = run_sweep(cfg, workers=args.workers)
    print(sweep_csv(rows), end="")
    print(sweep_summary(rows, res.inner_radius), end="")
    ok = [r for r in rows if r["norm_u"] is not None]
    if len(ok) > 1:
        lam = np.log([r["lambda"] for r in ok])
        nrm = np.log([r["norm_u"] for r in ok])
        slope = np.polyfit(lam, nrm, 1)[0]
        if res.scalar:
            k = res.spec.k[0]
            print(f"fitted slope of log norm_u vs log lambda: {slope:.4f} "
                  f"(envelope slope {envelope_slope(res.indices[0], k):.4f})")
        else:
            print(f"fitted slope of log norm_u vs log lambda: {slope:.4f}")


if __name__ == "__main__":
    main()
