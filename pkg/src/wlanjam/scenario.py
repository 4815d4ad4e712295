"""Scenario configuration and its JSON file format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath
from typing import Any

import numpy as np

from .channel import ChannelModel, GeoTarget, NoiseConfig, Path, ScenarioGeometry, dbm_to_watts, geometry_to_paths
from .detect import CfarConfig, TrackerConfig
from .jammer import JammerConfig, PhantomTarget, PhantomTrajectory, speed_to_delay_rate
from .waveform import OfdmConfig, SltfGrid, load_sltf_sequence, make_sltf_grid

__all__ = ["ScenarioError", "ScenarioConfig", "load_scenario", "scenario_from_dict", "default_scenario"]


class ScenarioError(ValueError):
    """Invalid or inconsistent scenario description."""


@dataclass(frozen=True)
class ScenarioConfig:
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    stx_channel_fixed: ChannelModel | None = None
    jammer_channel_fixed: ChannelModel | None = None
    geometry: ScenarioGeometry | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    jammer: JammerConfig | None = None
    snapshots: int = 1
    snapshot_period: float | None = None
    seed: int = 0
    sltf_seed: int = 0
    sltf_sequence: tuple[float, ...] | None = None
    intra_doppler: bool = True
    window: str = "rectangular"
    cfar: CfarConfig = field(default_factory=CfarConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    # index (in delay order) of the STx echo reported as "the true target"
    true_target_path: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        if self.snapshots < 1:
            raise ScenarioError("snapshot count must be >= 1")
        if self.stx_channel_fixed is None and self.geometry is None:
            raise ScenarioError("need either explicit STx paths or a geometry")
        if self.jammer is not None:
            if self.jammer_channel_fixed is None and (self.geometry is None or self.geometry.jammer is None):
                raise ScenarioError("jammer configured but no jammer->SRx link given")
            try:
                self.jammer.validate(self.ofdm)
            except ValueError as exc:
                raise ScenarioError(str(exc)) from exc
        for ch in (self.stx_channel_fixed, self.jammer_channel_fixed):
            if ch is not None:
                try:
                    ch.validate(self.ofdm)
                except ValueError as exc:
                    raise ScenarioError(str(exc)) from exc
        if self.window not in ("rectangular", "hann"):
            raise ScenarioError(f"unknown window {self.window!r}")

    @property
    def period(self) -> float:
        if self.snapshot_period is not None:
            return self.snapshot_period
        return self.ofdm.num_pulses * self.ofdm.pri

    def sltf_grid(self) -> SltfGrid:
        return make_sltf_grid(self.ofdm, self.sltf_seed, self.sltf_sequence)

    def stx_channel(self, k: int = 0) -> ChannelModel:
        if self.stx_channel_fixed is not None:
            return self.stx_channel_fixed
        return geometry_to_paths(self.ofdm, self.geometry.at_time(k * self.period), "stx")

    def jammer_channel(self, k: int = 0) -> ChannelModel:
        if self.jammer_channel_fixed is not None:
            return self.jammer_channel_fixed
        return geometry_to_paths(self.ofdm, self.geometry.at_time(k * self.period), "jammer")


# ---------------------------------------------------------------------------
# JSON parsing


def _amplitude(d: dict, default=1.0) -> complex:
    if "amplitude_db" in d:
        a = 10 ** (float(d["amplitude_db"]) / 20)
    elif "amplitude" in d:
        v = d["amplitude"]
        a = complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
    else:
        a = complex(default)
    return a * np.exp(1j * np.deg2rad(float(d.get("phase_deg", 0.0))))


def _delay(d: dict, cfg: OfdmConfig, key: str = "delay") -> float:
    if f"{key}_samples" in d:
        return float(d[f"{key}_samples"]) * cfg.sample_interval
    if f"{key}_s" in d:
        return float(d[f"{key}_s"])
    raise ScenarioError(f"missing {key}_samples or {key}_s in {d}")


def _doppler(d: dict, cfg: OfdmConfig) -> float:
    if "doppler_gates" in d:
        return float(d["doppler_gates"]) / (cfg.num_pulses * cfg.pri)
    return float(d.get("doppler_hz", 0.0))


def _paths(items, cfg: OfdmConfig) -> ChannelModel:
    return ChannelModel.from_paths([Path(_amplitude(p), _delay(p, cfg), _doppler(p, cfg)) for p in items])


def _phantom(d: dict, cfg: OfdmConfig, period: float):
    if "schedule" in d:
        return PhantomTrajectory(schedule=tuple(_phantom(p, cfg, period) for p in d["schedule"]))
    if "trajectory" in d:
        t = d["trajectory"]
        if "speed_mps" in t:
            rate = speed_to_delay_rate(float(t["speed_mps"]))
        else:
            rate = float(t.get("delay_rate", 0.0))
        return PhantomTrajectory(
            initial_delay=_delay(t, cfg, "initial_delay"),
            delay_rate=rate,
            period=float(t.get("period_s", period)),
            carrier_freq=cfg.carrier_freq,
            amplitude=_amplitude(t),
        )
    return PhantomTarget(_amplitude(d), _delay(d, cfg), _doppler(d, cfg))


def _vec(v) -> tuple[float, float, float]:
    v = tuple(float(x) for x in v)
    if len(v) == 2:
        v = v + (0.0,)
    if len(v) != 3:
        raise ScenarioError(f"positions/velocities need 2 or 3 components, got {v}")
    return v


def _geometry(d: dict) -> ScenarioGeometry:
    return ScenarioGeometry(
        stx=_vec(d["stx"]),
        srx=_vec(d["srx"]),
        jammer=_vec(d["jammer"]) if d.get("jammer") is not None else None,
        targets=tuple(
            GeoTarget(_vec(t["position"]), _vec(t.get("velocity", (0, 0, 0))), float(t.get("rcs", 1.0)))
            for t in d.get("targets", [])
        ),
        stx_power_dbm=float(d.get("stx_power_dbm", 23.0)),
        jammer_power_dbm=float(d.get("jammer_power_dbm", 30.0)),
    )


def _jammer(d: dict, cfg: OfdmConfig, period: float) -> JammerConfig:
    phantoms = tuple(_phantom(p, cfg, period) for p in d.get("phantoms", []))
    if "epsilon_range_s" in d:
        lo, hi = d["epsilon_range_s"]
        delta = None
        eps = (float(lo), float(hi))
    else:
        eps = None
        if "delta_tau_samples" in d:
            delta = float(d["delta_tau_samples"]) * cfg.sample_interval
        else:
            delta = float(d.get("delta_tau_s", 0.0))
    return JammerConfig(phantoms, delta, eps, int(d.get("seed", 0)), _gain(d))


def _gain(d: dict) -> complex:
    if "gain_db" in d:
        return complex(10 ** (float(d["gain_db"]) / 20))
    g = d.get("gain", 1.0)
    return complex(g[0], g[1]) if isinstance(g, (list, tuple)) else complex(g)


def scenario_from_dict(d: dict[str, Any], base_dir=None) -> ScenarioConfig:
    try:
        cfg = OfdmConfig(**d.get("ofdm", {}))
        period = d.get("snapshot_period_s")
        period_val = float(period) if period is not None else cfg.num_pulses * cfg.pri
        links = d.get("links", {})
        stx = _paths(links["stx"], cfg) if "stx" in links else None
        jam = _paths(links["jammer"], cfg) if "jammer" in links else None
        geom = _geometry(d["geometry"]) if "geometry" in d else None
        nd = d.get("noise", {})
        if "power_dbm" in nd:
            noise = NoiseConfig(dbm_to_watts(float(nd["power_dbm"])))
        else:
            noise = NoiseConfig(float(nd.get("power", 0.0)))
        jammer = _jammer(d["jammer"], cfg, period_val) if d.get("jammer") else None
        sl = d.get("sltf", {})
        seq = None
        if "file" in sl:
            p = FsPath(sl["file"])
            if base_dir is not None and not p.is_absolute():
                p = FsPath(base_dir) / p
            seq = tuple(load_sltf_sequence(p, cfg.num_subcarriers))
        cf = d.get("cfar", {})
        tr = d.get("tracker", {})
        return ScenarioConfig(
            ofdm=cfg,
            stx_channel_fixed=stx,
            jammer_channel_fixed=jam,
            geometry=geom,
            noise=noise,
            jammer=jammer,
            snapshots=int(d.get("snapshots", 1)),
            snapshot_period=float(period) if period is not None else None,
            seed=int(d.get("seed", 0)),
            sltf_seed=int(sl.get("seed", 0)),
            sltf_sequence=seq,
            intra_doppler=bool(d.get("intra_doppler", True)),
            window=str(d.get("window", "rectangular")),
            cfar=CfarConfig(**cf),
            tracker=TrackerConfig(**tr),
            true_target_path=int(d.get("true_target_path", 1)),
            out_dir=d.get("out_dir"),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    path = FsPath(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return scenario_from_dict(data, base_dir=path.parent)


DEFAULT_SCENARIO_FILE = FsPath(__file__).with_name("default_scenario.json")


def default_scenario(**overrides) -> ScenarioConfig:
    """The shipped Case I scene (80 MHz, Q=1024, Q_cp=64, M=128, T_i=2 ms)."""
    sc = load_scenario(DEFAULT_SCENARIO_FILE)
    return replace(sc, **overrides) if overrides else sc
