"""RDM, detection and track files.

f32le layout: 16-byte header (b"RDM0", u32 Q, u32 M, u32 flags; little-endian)
followed by Q*M float32 dB magnitudes, row-major (range rows, Doppler columns in
ascending signed-gate order).
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .detect import Detection, Track
from .receiver import Rdm, signed_doppler_order

__all__ = [
    "MAGIC",
    "FLAG_HANN",
    "FLAG_CENTERED",
    "rdm_db",
    "export_rdm",
    "read_rdm_f32le",
    "pgm_pixels",
    "read_pgm",
    "rdm_from_db",
    "write_snapshot",
    "write_tracks",
    "read_detections",
]

MAGIC = b"RDM0"
FLAG_HANN = 1
FLAG_CENTERED = 2
DB_FLOOR = -400.0
EXTENSIONS = {"f32le": ".f32", "csv": ".csv", "pgm": ".pgm"}


def rdm_db(rdm_or_grid) -> np.ndarray:
    grid = rdm_or_grid.grid if isinstance(rdm_or_grid, Rdm) else np.asarray(rdm_or_grid)
    mag = np.abs(grid)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag)
    return np.maximum(db, DB_FLOOR)


def pgm_pixels(db: np.ndarray, dynamic_range: float = 60.0) -> np.ndarray:
    """Linear map of [peak - dynamic_range, peak] dB onto 0..255."""
    if dynamic_range <= 0:
        raise ValueError("dynamic range must be positive")
    top = float(np.max(db))
    scaled = (np.asarray(db, float) - (top - dynamic_range)) / dynamic_range * 255.0
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def export_rdm(rdm, path, fmt: str = "f32le", dynamic_range: float = 60.0) -> Path:
    """Write ``rdm`` (an :class:`Rdm` or a plain complex/real grid) to ``path``."""
    path = Path(path)
    window = rdm.window if isinstance(rdm, Rdm) else "rectangular"
    db = rdm_db(rdm)
    q, m = db.shape
    if fmt == "f32le":
        flags = FLAG_CENTERED | (FLAG_HANN if window == "hann" else 0)
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<III", q, m, flags))
            fh.write(db.astype("<f4").tobytes(order="C"))
    elif fmt == "csv":
        np.savetxt(path, db, fmt="%.6f", delimiter=",")
    elif fmt == "pgm":
        pix = pgm_pixels(db, dynamic_range)
        with open(path, "wb") as fh:
            # width = Doppler gates, height = range gates
            fh.write(f"P5\n{m} {q}\n255\n".encode("ascii"))
            fh.write(pix.tobytes(order="C"))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def read_rdm_f32le(path) -> tuple[np.ndarray, int]:
    """Returns (dB matrix, flags)."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an RDM0 file")
    q, m, flags = struct.unpack("<III", raw[4:16])
    body = np.frombuffer(raw, dtype="<f4", offset=16)
    if body.size != q * m:
        raise ValueError(f"{path}: expected {q * m} values, found {body.size}")
    return body.reshape(q, m).astype(np.float64), flags


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def rdm_from_db(db: np.ndarray, range_per_gate: float, speed_per_gate: float, flags: int = FLAG_CENTERED) -> Rdm:
    """Magnitude-only Rdm rebuilt from a dB matrix (phase is not stored)."""
    _, gates = signed_doppler_order(db.shape[1])
    mag = 10 ** (np.asarray(db) / 20)
    mag[np.asarray(db) <= DB_FLOOR] = 0.0
    window = "hann" if flags & FLAG_HANN else "rectangular"
    return Rdm(mag.astype(complex), gates, range_per_gate, speed_per_gate, window)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_snapshot(out_dir: Path, res, fmt: str = "f32le") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"k{res.k:04d}"
    rdm_path = export_rdm(res.rdm, out_dir / f"rdm_{stem}{EXTENSIONS[fmt]}", fmt)
    _dump(out_dir / f"rdm_{stem}.json", {
        "file": rdm_path.name,
        "format": fmt,
        "range_per_gate_m": res.rdm.range_per_gate,
        "speed_per_gate_mps": res.rdm.speed_per_gate,
        "window": res.rdm.window,
        "shape": list(res.rdm.shape),
    })
    _dump(out_dir / f"detections_{stem}.json", {
        "snapshot": res.k,
        "meta": res.meta,
        "detections": [d.to_dict() for d in res.detections],
    })


def write_tracks(path: Path, tracks: list[Track]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _dump(path, {"tracks": [t.to_dict() for t in tracks]})


def read_detections(directory) -> list[tuple[int, list[Detection]]]:
    """All detections_k*.json files in ``directory`` as (snapshot, detections), sorted."""
    out = []
    for f in sorted(Path(directory).glob("detections_k*.json")):
        data = json.loads(f.read_text())
        out.append((int(data["snapshot"]), [Detection.from_dict(d) for d in data["detections"]]))
    out.sort(key=lambda x: x[0])
    return out
