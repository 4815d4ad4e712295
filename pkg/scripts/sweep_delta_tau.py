#!/usr/bin/env python3
"""Sweep the jammer arrival offset across and beyond the CP and tabulate capture and detections."""
import argparse
import csv
import sys
from pathlib import Path

from wlanjam.pipeline import sweep
from wlanjam.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", type=Path, default=ROOT / "scenarios" / "case1.json")
    ap.add_argument("--values", default="-100,-80,-70,-64,-40,-16,0,16,40,64,70,100")
    ap.add_argument("--no-noise", action="store_true")
    args = ap.parse_args()
    sc = load_scenario(args.scenario)
    rows = sweep(sc, "delta_tau", [float(v) for v in args.values.split(",")], noise=not args.no_noise)
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


if __name__ == "__main__":
    main()
