"""Cell-averaging CFAR on range/Doppler maps and a small GNN M-of-N tracker."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import ndimage

from .receiver import Rdm

__all__ = [
    "CfarConfig",
    "Detection",
    "ca_threshold_factor",
    "cfar_2d",
    "cfar_mask",
    "TrackStatus",
    "Track",
    "TrackerConfig",
    "associate_and_track",
    "fit_gate_rates",
]


@dataclass(frozen=True)
class CfarConfig:
    """Per-dimension sizes are (range, Doppler)."""

    guard: tuple[int, int] = (2, 2)
    train: tuple[int, int] = (3, 3)
    pfa: float = 1e-3
    zero_doppler_exclusion: int | None = 1
    # cells weaker than the map peak by more than this are never declared
    floor_db: float | None = 120.0

    def __post_init__(self):
        object.__setattr__(self, "guard", tuple(int(g) for g in self.guard))
        object.__setattr__(self, "train", tuple(int(t) for t in self.train))
        if min(self.train) < 1:
            raise ValueError("need at least one training cell per dimension")
        if min(self.guard) < 0:
            raise ValueError("guard cells must be >= 0")
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")

    @property
    def num_training(self) -> int:
        outer = (2 * (self.guard[0] + self.train[0]) + 1) * (2 * (self.guard[1] + self.train[1]) + 1)
        inner = (2 * self.guard[0] + 1) * (2 * self.guard[1] + 1)
        return outer - inner


@dataclass(frozen=True)
class Detection:
    range_gate: int
    doppler_gate: int
    power: float
    range_m: float
    speed: float

    def to_dict(self) -> dict:
        return {
            "range_gate": self.range_gate,
            "doppler_gate": self.doppler_gate,
            "power": self.power,
            "range_m": self.range_m,
            "speed": self.speed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Detection":
        return cls(int(d["range_gate"]), int(d["doppler_gate"]), float(d["power"]),
                   float(d["range_m"]), float(d["speed"]))


def ca_threshold_factor(num_training, pfa: float):
    """Cell-averaging scale alpha = N (pfa^(-1/N) - 1) for exponential cell power."""
    n = np.asarray(num_training, dtype=float)
    return n * (pfa ** (-1.0 / n) - 1.0)


def _box_sum(x: np.ndarray, half: tuple[int, int]) -> np.ndarray:
    """Sum over a (2h0+1)x(2h1+1) box: zero beyond the range edges, wrapped in Doppler."""
    h0, h1 = half
    padded = np.pad(x, ((0, 0), (h1, h1)), mode="wrap")
    padded = np.pad(padded, ((h0, h0), (0, 0)), mode="constant")
    kernel = np.ones((2 * h0 + 1, 2 * h1 + 1))
    full = ndimage.correlate(padded, kernel, mode="constant", cval=0.0)
    return full[h0 : h0 + x.shape[0], h1 : h1 + x.shape[1]]


def cfar_mask(power: np.ndarray, cfg: CfarConfig) -> tuple[np.ndarray, np.ndarray]:
    """(raw threshold-crossing mask, threshold map) before peak reduction."""
    q, m = power.shape
    g, t = cfg.guard, cfg.train
    if 2 * (g[0] + t[0]) + 1 > q or 2 * (g[1] + t[1]) + 1 > m:
        raise ValueError("CFAR window does not fit in the map")
    outer = (g[0] + t[0], g[1] + t[1])
    ones = np.ones_like(power)
    train_sum = _box_sum(power, outer) - _box_sum(power, g)
    train_cnt = np.rint(_box_sum(ones, outer) - _box_sum(ones, g))
    alpha = ca_threshold_factor(train_cnt, cfg.pfa)
    threshold = alpha * train_sum / train_cnt
    return power > threshold, threshold


def cfar_2d(rdm: Rdm, cfg: CfarConfig = CfarConfig()) -> list[Detection]:
    power = rdm.power
    hits, _ = cfar_mask(power, cfg)
    peak = power.max()
    if peak <= 0:
        return []
    if cfg.floor_db is not None:
        hits &= power >= peak * 10 ** (-cfg.floor_db / 10)
    size = (2 * cfg.guard[0] + 1, 2 * cfg.guard[1] + 1)
    local_max = power >= ndimage.maximum_filter(power, size=size, mode=("nearest", "wrap"))
    hits &= local_max & (power > 0)
    if cfg.zero_doppler_exclusion is not None:
        hits[:, np.abs(rdm.doppler_gates) <= cfg.zero_doppler_exclusion] = False
    rows, cols = np.nonzero(hits)
    dets = [
        Detection(
            int(r),
            int(rdm.doppler_gates[c]),
            float(power[r, c]),
            float(r * rdm.range_per_gate),
            float(rdm.doppler_gates[c] * rdm.speed_per_gate),
        )
        for r, c in zip(rows, cols)
    ]
    dets.sort(key=lambda d: (-d.power, d.range_gate, d.doppler_gate))
    return dets


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DEAD = "dead"


@dataclass
class Track:
    id: int
    born: int
    states: list[tuple[int, int, int]] = field(default_factory=list)  # (snapshot, range, doppler)
    hits: list[bool] = field(default_factory=list)
    status: TrackStatus = TrackStatus.TENTATIVE
    confirmed_at: int | None = None

    @property
    def alive(self) -> bool:
        return self.status is not TrackStatus.DEAD

    @property
    def misses_in_a_row(self) -> int:
        n = 0
        for h in reversed(self.hits):
            if h:
                break
            n += 1
        return n

    def predict(self, k: int) -> tuple[float, float]:
        _, l, v = self.states[-1]
        if len(self.states) >= 2:
            (k0, l0, _), (k1, l1, _) = self.states[-2], self.states[-1]
            rate = (l1 - l0) / (k1 - k0)
            return l + rate * (k - k1), v
        return float(l), float(v)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "born": self.born,
            "status": self.status.value,
            "confirmed_at": self.confirmed_at,
            "states": [list(s) for s in self.states],
            "hits": list(self.hits),
        }


@dataclass(frozen=True)
class TrackerConfig:
    gate_radius: float = 3.0
    m_of: int = 3
    n_of: int = 5
    max_misses: int = 3
    # new tracks are not started beyond this range gate (None: anywhere)
    max_range_gate: int | None = None


def associate_and_track(
    tracks: list[Track],
    detections: Sequence[Detection],
    k: int,
    gate_radius: float | None = None,
    cfg: TrackerConfig = TrackerConfig(),
) -> list[Track]:
    """One tracker update at snapshot ``k``: greedy nearest-neighbour association."""
    radius = cfg.gate_radius if gate_radius is None else gate_radius
    if radius < 0:
        raise ValueError("gate radius must be >= 0")
    live = [t for t in tracks if t.alive]
    pairs = []
    for t in live:
        pl, pv = t.predict(k)
        for j, d in enumerate(detections):
            dist = float(np.hypot(d.range_gate - pl, d.doppler_gate - pv))
            if dist <= radius:
                pairs.append((dist, t.id, j, t))
    pairs.sort(key=lambda p: p[:3])
    used_tracks, used_dets = set(), set()
    for _, tid, j, t in pairs:
        if tid in used_tracks or j in used_dets:
            continue
        used_tracks.add(tid)
        used_dets.add(j)
        d = detections[j]
        t.states.append((k, d.range_gate, d.doppler_gate))
        t.hits.append(True)
    for t in live:
        if t.id not in used_tracks:
            t.hits.append(False)
        if sum(t.hits[-cfg.n_of :]) >= cfg.m_of and t.status is TrackStatus.TENTATIVE:
            t.status = TrackStatus.CONFIRMED
            t.confirmed_at = k
        if t.misses_in_a_row >= cfg.max_misses:
            t.status = TrackStatus.DEAD
    next_id = max((t.id for t in tracks), default=-1) + 1
    out = list(tracks)
    for j, d in enumerate(detections):
        if j in used_dets:
            continue
        if cfg.max_range_gate is not None and d.range_gate > cfg.max_range_gate:
            continue
        out.append(Track(next_id, k, [(k, d.range_gate, d.doppler_gate)], [True]))
        next_id += 1
    return out


def fit_gate_rates(track: Track) -> tuple[float, float, float, float]:
    """Least-squares (range rate, range intercept, Doppler rate, Doppler intercept)
    in gates per snapshot over the track's hits."""
    ks = np.array([s[0] for s in track.states], float)
    if len(ks) < 2:
        raise ValueError("need at least two hits to fit a rate")
    ls = np.array([s[1] for s in track.states], float)
    vs = np.array([s[2] for s in track.states], float)
    rl, il = np.polyfit(ks, ls, 1)
    rv, iv = np.polyfit(ks, vs, 1)
    return float(rl), float(il), float(rv), float(iv)
