"""End-to-end orchestration: composite STx + jammer reception, campaigns, sweeps."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .channel import NoiseConfig, add_awgn, apply_channel_to_pulses
from .detect import Detection, Track, associate_and_track, cfar_2d
from .jammer import (
    PhantomTarget,
    PhantomTrajectory,
    draw_epsilon,
    schedule_transmission,
    speed_to_delay_rate,
    synthesize_jammer_pulses,
)
from .receiver import Rdm, compute_rdm, estimate_ctf, find_timing_reference
from .scenario import ScenarioConfig
from .waveform import IqPulse, modulate_pulse

log = logging.getLogger(__name__)

__all__ = [
    "ReceivedWindows",
    "SnapshotResult",
    "CampaignResult",
    "receive_windows",
    "run_snapshot",
    "run_campaign",
    "sweep",
    "SWEEP_PARAMS",
    "peak_to_profile_db",
]


@dataclass
class ReceivedWindows:
    stx: np.ndarray
    jammer: np.ndarray | None
    total: np.ndarray
    stx_arrival: float  # STx LOS CP start, samples
    jammer_arrival: float | None
    delta_tau: float | None  # seconds, STx arrival minus jammer arrival
    epsilon: float | None = None


@dataclass
class SnapshotResult:
    k: int
    rdm: Rdm
    detections: list[Detection]
    timing_offset: int
    captured_by: str
    meta: dict = field(default_factory=dict)


@dataclass
class CampaignResult:
    snapshots: list[SnapshotResult]
    tracks: list[Track]

    @property
    def confirmed(self) -> list[Track]:
        """Tracks that reached confirmation at any point (even if dead since)."""
        return [t for t in self.tracks if t.confirmed_at is not None]


def _ceil_samples(seconds: float, T: float) -> int:
    return int(math.ceil(seconds / T - 1e-9))


def receive_windows(sc: ScenarioConfig, k: int = 0, noise: bool = True) -> ReceivedWindows:
    """Synthesize the composite receive windows of snapshot ``k``."""
    cfg = sc.ofdm
    T = cfg.sample_interval
    grid = sc.sltf_grid()
    stx_ch = sc.stx_channel(k)
    jam_ch = sc.jammer_channel(k) if sc.jammer is not None else None

    # Relative jammer epoch; the STx epoch is pushed later if the jammer must lead.
    rel_epoch, eps = 0.0, None
    if sc.jammer is not None:
        if sc.jammer.deterministic:
            rel_epoch = stx_ch.los.delay - jam_ch.los.delay - sc.jammer.delta_tau
        else:
            eps = draw_epsilon(sc.jammer, k)
            rel_epoch = eps
    stx_epoch = _ceil_samples(max(0.0, -rel_epoch), T) * T

    stx_pulses = [modulate_pulse(cfg, grid, m).with_epoch(stx_epoch) for m in range(cfg.num_pulses)]
    jam_pulses: list[IqPulse] = []
    delta_tau = None
    if sc.jammer is not None:
        phantoms = sc.jammer.phantoms_at(k)
        raw = synthesize_jammer_pulses(cfg, grid, phantoms, sc.jammer.gain)
        jam_pulses, delta_tau = schedule_transmission(
            raw, sc.jammer, stx_ch.los.delay, jam_ch.los.delay, stx_epoch, k
        )

    last = stx_epoch + max(p.delay for p in stx_ch.paths)
    if jam_pulses:
        last = max(last, jam_pulses[0].epoch + max(p.delay for p in jam_ch.paths))
    guard = _ceil_samples(last, T) + 2

    stx_win = apply_channel_to_pulses(cfg, stx_pulses, stx_ch, guard, sc.intra_doppler)
    total = stx_win.copy()
    jam_win = None
    jam_arrival = None
    if jam_pulses:
        jam_win = apply_channel_to_pulses(cfg, jam_pulses, jam_ch, guard, sc.intra_doppler)
        total += jam_win
        jam_arrival = (jam_pulses[0].epoch + jam_ch.los.delay) / T
    if noise and sc.noise.power > 0:
        total = add_awgn(total, NoiseConfig(sc.noise.power, (sc.seed, k)))
    return ReceivedWindows(
        stx_win, jam_win, total, (stx_epoch + stx_ch.los.delay) / T, jam_arrival, delta_tau, eps
    )


def run_snapshot(sc: ScenarioConfig, k: int = 0, noise: bool = True) -> SnapshotResult:
    cfg = sc.ofdm
    grid = sc.sltf_grid()
    rx = receive_windows(sc, k, noise)
    reference = modulate_pulse(cfg, grid, 0).samples[cfg.cp_len :]
    lag = find_timing_reference(cfg, rx.total[0], reference)
    offset = lag - cfg.cp_len
    if offset < 0:
        log.warning("correlation peak at lag %d precedes a full CP; clamping offset to 0", lag)
        offset = 0
    captured = "stx"
    if rx.jammer_arrival is not None and abs(offset - rx.jammer_arrival) < abs(offset - rx.stx_arrival):
        captured = "jammer"
    ctf = estimate_ctf(cfg, rx.total, offset, grid)
    rdm = compute_rdm(ctf, sc.window, cfg)
    dets = cfar_2d(rdm, sc.cfar)
    meta = {
        "snapshot": k,
        "timing_offset": offset,
        "captured_by": captured,
        "stx_los_arrival_samples": rx.stx_arrival,
        "jammer_los_arrival_samples": rx.jammer_arrival,
        "delta_tau_s": rx.delta_tau,
        "delta_tau_samples": None if rx.delta_tau is None else rx.delta_tau / cfg.sample_interval,
        "epsilon_s": rx.epsilon,
        "range_per_gate_m": rdm.range_per_gate,
        "speed_per_gate_mps": rdm.speed_per_gate,
        "window": rdm.window,
        "noise": bool(noise and sc.noise.power > 0),
    }
    return SnapshotResult(k, rdm, dets, offset, captured, meta)


def run_campaign(
    sc: ScenarioConfig,
    snapshots: int | None = None,
    out_dir=None,
    noise: bool = True,
    fmt: str = "f32le",
) -> CampaignResult:
    """Run ``snapshots`` consecutive snapshots, tracking detections as they come."""
    from .export import write_snapshot, write_tracks

    n = sc.snapshots if snapshots is None else snapshots
    if n < 1:
        raise ValueError("need at least one snapshot")
    results: list[SnapshotResult] = []
    tracks: list[Track] = []
    for k in range(n):
        res = run_snapshot(sc, k, noise)
        tracks = associate_and_track(tracks, res.detections, k, cfg=sc.tracker)
        results.append(res)
        if out_dir is not None:
            write_snapshot(FsPath(out_dir), res, fmt)
    if out_dir is not None:
        write_tracks(FsPath(out_dir) / "tracks.json", tracks)
    return CampaignResult(results, tracks)


# ---------------------------------------------------------------------------
# metrics used by sweeps and acceptance checks


def true_target_cell(sc: ScenarioConfig, k: int = 0) -> tuple[int, int] | None:
    """Unjammed (range gate, Doppler gate) of the designated true-target echo."""
    ch = sc.stx_channel(k)
    if sc.true_target_path >= len(ch.paths):
        return None
    p = ch.paths[sc.true_target_path]
    cfg = sc.ofdm
    l = round((p.delay - ch.los.delay) / cfg.sample_interval)
    v = round(float(cfg.doppler_gate(p.doppler)))
    return l, v


def phantom_cells(sc: ScenarioConfig, k: int = 0) -> list[tuple[int, int]]:
    """Programmed phantom cells relative to the jammer LOS (jammer-captured timing)."""
    if sc.jammer is None:
        return []
    cfg = sc.ofdm
    jam_los = sc.jammer_channel(k).los
    return [
        (round(ph.delay / cfg.sample_interval), round(float(cfg.doppler_gate(ph.doppler + jam_los.doppler))))
        for ph in sc.jammer.phantoms_at(k)
    ]


def peak_to_profile_db(rdm: Rdm, doppler_gate: int) -> float:
    """Peak power over total energy of one range profile (dB, <= 0)."""
    p = np.abs(rdm.profile(doppler_gate)) ** 2
    total = p.sum()
    return float(10 * np.log10(p.max() / total)) if total > 0 else float("-inf")


def wrap_gate(l: int, q: int) -> int:
    return int((l + q // 2) % q - q // 2)


def _find(dets: Sequence[Detection], doppler: int, tol: int = 1) -> list[Detection]:
    return [d for d in dets if abs(d.doppler_gate - doppler) <= tol]


SWEEP_PARAMS = ("delta_tau", "jammer_gain", "phantom_speed")


def _with_param(sc: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    if sc.jammer is None:
        raise ValueError("sweeps need a jammer in the scenario")
    jam = sc.jammer
    if param == "delta_tau":
        jam = replace(jam, delta_tau=float(value) * sc.ofdm.sample_interval, epsilon_range=None)
    elif param == "jammer_gain":
        jam = replace(jam, gain=complex(value))
    elif param == "phantom_speed":
        rate = speed_to_delay_rate(float(value))
        phantoms = []
        for ph in jam.phantoms:
            if isinstance(ph, PhantomTarget):
                ph = PhantomTrajectory(ph.delay, rate, sc.period, sc.ofdm.carrier_freq, ph.amplitude)
            elif ph.schedule is None:
                ph = replace(ph, delay_rate=rate)
            phantoms.append(ph)
        jam = replace(jam, phantoms=tuple(phantoms))
    else:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")
    return replace(sc, jammer=jam)


def sweep(
    sc: ScenarioConfig,
    param: str,
    values: Sequence[float],
    snapshots: int | None = None,
    noise: bool = True,
) -> list[dict]:
    """Re-run the campaign for each value; one metrics row per value.

    ``delta_tau`` values are in samples, ``jammer_gain`` is linear amplitude and
    ``phantom_speed`` is the closing speed in m/s.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    q = sc.ofdm.num_subcarriers
    for value in values:
        s = _with_param(sc, param, value)
        camp = run_campaign(s, snapshots, noise=noise)
        first = camp.snapshots[0]
        row = {
            "param": param,
            "value": float(value),
            "captured_by": first.captured_by,
            "jammer_captured": first.captured_by == "jammer",
            "delta_tau_samples": first.meta["delta_tau_samples"],
            "true_gate_shift": None,
            "true_detected": False,
            "true_peak_to_profile_db": None,
            "phantom_detected": False,
            "phantom_track_confirmed": False,
            "num_detections": len(first.detections),
        }
        cell = true_target_cell(s)
        if cell is not None:
            l0, v0 = cell
            row["true_peak_to_profile_db"] = peak_to_profile_db(first.rdm, v0)
            hits = _find(first.detections, v0)
            if hits:
                best = max(hits, key=lambda d: d.power)
                row["true_detected"] = True
                row["true_gate_shift"] = wrap_gate(best.range_gate - l0, q)
        ph_cells = phantom_cells(s)
        if ph_cells:
            _, pv = ph_cells[0]
            row["phantom_detected"] = bool(_find(first.detections, pv))
            row["phantom_track_confirmed"] = any(
                abs(np.mean([st[2] for st in t.states]) - pv) <= 1 for t in camp.confirmed
            )
        rows.append(row)
    return rows
