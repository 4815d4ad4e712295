"""Command-line entry point: simulate, detect, track, render, sweep."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .detect import CfarConfig, associate_and_track, cfar_2d
from .export import (
    export_rdm,
    read_detections,
    read_rdm_f32le,
    rdm_from_db,
    write_tracks,
)
from .pipeline import SWEEP_PARAMS, run_campaign, sweep
from .receiver import rdm_axes
from .scenario import ScenarioConfig, ScenarioError, load_scenario

EXIT_OK, EXIT_SCENARIO, EXIT_IO = 0, 2, 3

log = logging.getLogger("wlanjam")


def _load(path, seed=None, snapshots=None, out=None) -> ScenarioConfig:
    sc = load_scenario(path)
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if snapshots is not None:
        if snapshots < 1:
            raise ScenarioError("--snapshots must be >= 1")
        changes["snapshots"] = snapshots
    if out is not None:
        changes["out_dir"] = str(out)
    return replace(sc, **changes) if changes else sc


def cmd_simulate(args) -> int:
    sc = _load(args.scenario, args.seed, args.snapshots, args.out)
    out = Path(sc.out_dir or "out")
    camp = run_campaign(sc, out_dir=out, noise=not args.no_noise, fmt=args.format)
    for res in camp.snapshots:
        print(f"snapshot {res.k}: timing offset {res.timing_offset} ({res.captured_by} LOS), "
              f"{len(res.detections)} detections")
    print(f"{len(camp.confirmed)} confirmed track(s); outputs in {out}")
    return EXIT_OK


def _rdm_axes_for(path: Path):
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
        return meta["range_per_gate_m"], meta["speed_per_gate_mps"]
    return None


def cmd_detect(args) -> int:
    path = Path(args.rdm_file)
    db, flags = read_rdm_f32le(path)
    axes = _rdm_axes_for(path)
    if axes is None:
        from .waveform import OfdmConfig

        axes = rdm_axes(OfdmConfig(num_subcarriers=db.shape[0], cp_len=max(1, db.shape[0] // 16), num_pulses=db.shape[1]))
    rdm = rdm_from_db(db, *axes, flags)
    cfg = CfarConfig(guard=(args.guard, args.guard), train=(args.train, args.train), pfa=args.pfa)
    dets = cfar_2d(rdm, cfg)
    payload = {"source": path.name, "detections": [d.to_dict() for d in dets]}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_track(args) -> int:
    stream = read_detections(args.detections_dir)
    if not stream:
        raise OSError(f"no detections_k*.json files in {args.detections_dir}")
    tracks = []
    for k, dets in stream:
        tracks = associate_and_track(tracks, dets, k, gate_radius=args.gate_radius)
    out = Path(args.out) if args.out else Path(args.detections_dir) / "tracks.json"
    write_tracks(out, tracks)
    for t in tracks:
        last = t.states[-1]
        print(f"track {t.id}: {t.status.value}, {sum(t.hits)} hits, last (k={last[0]}, "
              f"range gate {last[1]}, doppler gate {last[2]})")
    return EXIT_OK


def cmd_render(args) -> int:
    path = Path(args.rdm_file)
    db, _ = read_rdm_f32le(path)
    out = Path(args.out) if args.out else path.with_suffix(".pgm")
    export_rdm(10 ** (db / 20), out, "pgm", args.dynamic_range)
    print(out)
    return EXIT_OK


def _values(text: str) -> list[float]:
    vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    if not vals:
        raise ScenarioError("--values must list at least one number")
    return vals


def cmd_sweep(args) -> int:
    sc = _load(args.scenario, args.seed, args.snapshots)
    rows = sweep(sc, args.param, _values(args.values), noise=not args.no_noise)
    fields = list(rows[0])
    writer = csv.DictWriter(sys.stdout, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wlanjam", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write RDMs, detections, tracks")
    s.add_argument("scenario")
    s.add_argument("--snapshots", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--no-noise", action="store_true")
    s.add_argument("--out")
    s.add_argument("--format", choices=("f32le", "csv", "pgm"), default="f32le")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", help="CA-CFAR on an f32le RDM file")
    d.add_argument("rdm_file")
    d.add_argument("--pfa", type=float, default=1e-3)
    d.add_argument("--guard", type=int, default=2)
    d.add_argument("--train", type=int, default=3)
    d.add_argument("--out")
    d.set_defaults(func=cmd_detect)

    t = sub.add_parser("track", help="track detections_k*.json files of a directory")
    t.add_argument("detections_dir")
    t.add_argument("--gate-radius", type=float, default=3.0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_track)

    r = sub.add_parser("render", help="f32le RDM to 8-bit PGM")
    r.add_argument("rdm_file")
    r.add_argument("--dynamic-range", type=float, default=60.0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_render)

    w = sub.add_parser("sweep", help="re-run a scenario over parameter values")
    w.add_argument("scenario")
    w.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    w.add_argument("--values", required=True, help="comma-separated list")
    w.add_argument("--snapshots", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--no-noise", action="store_true")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # bad numeric input from files or flags
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
