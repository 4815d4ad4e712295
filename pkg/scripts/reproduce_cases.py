#!/usr/bin/env python3
"""Run the unjammed scene, Case I and Case III and print where the true target and phantom land."""
import argparse
from dataclasses import replace
from pathlib import Path

from wlanjam.export import export_rdm
from wlanjam.pipeline import peak_to_profile_db, phantom_cells, run_snapshot, true_target_cell

ROOT = Path(__file__).resolve().parent.parent


def summarize(name, sc, out):
    res = run_snapshot(sc)
    l0, v0 = true_target_cell(sc)
    col = [d for d in res.detections if d.doppler_gate == v0]
    best = max(col, key=lambda d: d.power) if col else None
    print(f"{name:10s} timing by {res.captured_by:6s} offset {res.timing_offset:4d}  "
          f"target column: {len(col):3d} detections, strongest gate {best.range_gate if best else '-':>4}  "
          f"peak/profile {peak_to_profile_db(res.rdm, v0):6.2f} dB  total detections {len(res.detections)}")
    if sc.jammer is not None:
        pl, pv = phantom_cells(sc)[0]
        hit = any((d.range_gate, d.doppler_gate) == (pl, pv) for d in res.detections)
        print(f"{'':10s} phantom programmed at ({pl}, {pv}): detected={hit}")
    if out:
        out.mkdir(parents=True, exist_ok=True)
        export_rdm(res.rdm, out / f"{name}.pgm", "pgm")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, help="write PGM images here")
    args = ap.parse_args()
    from wlanjam.scenario import load_scenario

    case1 = load_scenario(ROOT / "scenarios" / "case1.json")
    summarize("unjammed", replace(case1, jammer=None), args.out)
    summarize("case1", case1, args.out)
    summarize("case3", load_scenario(ROOT / "scenarios" / "case3.json"), args.out)


if __name__ == "__main__":
    main()
