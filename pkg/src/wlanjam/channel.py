"""Sample-level multipath Doppler channel, AWGN and geometry-to-path conversion."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .waveform import SPEED_OF_LIGHT, IqPulse, OfdmConfig

__all__ = [
    "Path",
    "ChannelModel",
    "GeoTarget",
    "ScenarioGeometry",
    "NoiseConfig",
    "dbm_to_watts",
    "geometry_to_paths",
    "ctf_analytic",
    "delay_pulse_samples",
    "apply_channel_to_pulses",
    "add_awgn",
]

# Arrival times this close to a sample instant (in samples) are treated as integer.
_SNAP = 1e-9


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class Path:
    amplitude: complex
    delay: float
    doppler: float = 0.0

    def __post_init__(self):
        if abs(self.amplitude) <= 0:
            raise ValueError("path amplitude must be nonzero")
        if self.delay < 0:
            raise ValueError(f"path delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class ChannelModel:
    """Ordered echoes; ``paths[0]`` is the line of sight."""

    paths: tuple[Path, ...]

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("a channel needs at least the LOS path")
        if min(p.delay for p in self.paths) < self.paths[0].delay:
            raise ValueError("path 0 (LOS) must have the smallest delay")

    @classmethod
    def from_paths(cls, paths: Sequence[Path]) -> "ChannelModel":
        return cls(tuple(sorted(paths, key=lambda p: p.delay)))

    def __add__(self, other: "ChannelModel") -> "ChannelModel":
        return ChannelModel.from_paths(self.paths + other.paths)

    def __len__(self):
        return len(self.paths)

    @property
    def los(self) -> Path:
        return self.paths[0]

    def scaled(self, gain: complex) -> "ChannelModel":
        return ChannelModel(tuple(replace(p, amplitude=p.amplitude * gain) for p in self.paths))

    def validate(self, cfg: OfdmConfig) -> None:
        span = cfg.num_subcarriers * cfg.sample_interval
        for i, p in enumerate(self.paths):
            if p.delay >= span:
                raise ValueError(f"path {i}: delay {p.delay:g} s exceeds Q*T = {span:g} s")
            if abs(p.doppler) >= cfg.max_doppler:
                raise ValueError(
                    f"path {i}: |doppler| {abs(p.doppler):g} Hz >= 1/(2 T_i) = {cfg.max_doppler:g} Hz"
                )


@dataclass(frozen=True)
class GeoTarget:
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rcs: float = 1.0

    def moved(self, dt: float) -> "GeoTarget":
        pos = np.asarray(self.position) + dt * np.asarray(self.velocity)
        return replace(self, position=tuple(float(v) for v in pos))


@dataclass(frozen=True)
class ScenarioGeometry:
    stx: tuple[float, float, float]
    srx: tuple[float, float, float]
    jammer: tuple[float, float, float] | None = None
    targets: tuple[GeoTarget, ...] = ()
    stx_power_dbm: float = 23.0
    jammer_power_dbm: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        devices = [self.stx, self.srx] + ([self.jammer] if self.jammer is not None else [])
        for i in range(len(devices)):
            for j in range(i + 1, len(devices)):
                if np.allclose(devices[i], devices[j]):
                    raise ValueError("device positions must be pairwise distinct")

    def at_time(self, dt: float) -> "ScenarioGeometry":
        return replace(self, targets=tuple(t.moved(dt) for t in self.targets))


@dataclass(frozen=True)
class NoiseConfig:
    """Complex AWGN with variance ``power`` per sample (linear units of |sample|^2)."""

    power: float = 0.0
    seed: int | Sequence[int] = 0

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("noise power must be >= 0")

    @classmethod
    def from_dbm(cls, dbm: float, seed=0) -> "NoiseConfig":
        return cls(dbm_to_watts(dbm), seed)


def _bistatic_doppler(tx, rx, tgt: GeoTarget, wavelength: float) -> float:
    pos = np.asarray(tgt.position, float)
    vel = np.asarray(tgt.velocity, float)
    u_tx = (pos - np.asarray(tx, float)) / np.linalg.norm(pos - np.asarray(tx, float))
    u_rx = (pos - np.asarray(rx, float)) / np.linalg.norm(pos - np.asarray(rx, float))
    # d/dt (R_tx + R_rx) = (u_tx + u_rx) . v
    return float(-np.dot(u_tx + u_rx, vel) / wavelength)


def geometry_to_paths(cfg: OfdmConfig, geom: ScenarioGeometry, link: str = "stx") -> ChannelModel:
    """Build the ``stx`` (STx->SRx) or ``jammer`` (jammer->SRx) channel.

    Amplitudes are scaled so that |alpha|^2 times the mean pulse-sample power (Q)
    equals the received power in watts; antenna gains are unity and each path
    carries its carrier phase exp(-j 2 pi f_c tau).
    """
    if link == "stx":
        tx, p_dbm = geom.stx, geom.stx_power_dbm
    elif link == "jammer":
        if geom.jammer is None:
            raise ValueError("geometry has no jammer position")
        tx, p_dbm = geom.jammer, geom.jammer_power_dbm
    else:
        raise ValueError(f"unknown link {link!r}")
    lam = cfg.wavelength
    tx_amp = np.sqrt(dbm_to_watts(p_dbm) / cfg.num_subcarriers)

    def carrier(tau):
        return np.exp(-2j * np.pi * cfg.carrier_freq * tau)

    d_los = float(np.linalg.norm(np.subtract(tx, geom.srx)))
    tau = d_los / SPEED_OF_LIGHT
    paths = [Path(tx_amp * lam / (4 * np.pi * d_los) * carrier(tau), tau, 0.0)]
    for tgt in geom.targets:
        r1 = float(np.linalg.norm(np.subtract(tgt.position, tx)))
        r2 = float(np.linalg.norm(np.subtract(tgt.position, geom.srx)))
        if r1 == 0 or r2 == 0:
            raise ValueError("target coincides with a device")
        tau = (r1 + r2) / SPEED_OF_LIGHT
        gain = np.sqrt(lam**2 * tgt.rcs / ((4 * np.pi) ** 3 * r1**2 * r2**2))
        paths.append(Path(tx_amp * gain * carrier(tau), tau, _bistatic_doppler(tx, geom.srx, tgt, lam)))
    ch = ChannelModel.from_paths(paths)
    ch.validate(cfg)
    return ch


def ctf_analytic(cfg: OfdmConfig, ch: ChannelModel, ref_delay: float) -> np.ndarray:
    """Closed-form Q x M channel transfer function for timing reference ``ref_delay``."""
    q = np.arange(cfg.num_subcarriers)[:, None]
    m = np.arange(cfg.num_pulses)[None, :]
    out = np.zeros((cfg.num_subcarriers, cfg.num_pulses), complex)
    for p in ch.paths:
        rng_phase = np.exp(-2j * np.pi * q * cfg.subcarrier_spacing * (p.delay - ref_delay))
        dop_phase = np.exp(2j * np.pi * m * cfg.pri * p.doppler)
        out += p.amplitude * rng_phase * dop_phase
    return out


def _split_delay(d: float) -> tuple[int, float]:
    k = np.floor(d)
    frac = d - k
    if frac < _SNAP:
        return int(k), 0.0
    if frac > 1 - _SNAP:
        return int(k) + 1, 0.0
    return int(k), float(frac)


def delay_pulse_samples(cfg: OfdmConfig, samples: np.ndarray, delay: float, length: int) -> np.ndarray:
    """Place CP-OFDM pulse(s) delayed by ``delay`` samples into windows of ``length``.

    ``samples`` is (..., Q_cp + Q). Fractional delays evaluate the symbol's
    trigonometric interpolant (its Q subcarriers at frequencies q/Q) at the
    shifted instants, restricted to the pulse's rectangular support. Inside the
    support this is exact for an OFDM symbol, which a padded FFT phase ramp is not.
    """
    samples = np.asarray(samples, complex)
    lp, q, cp = cfg.pulse_len, cfg.num_subcarriers, cfg.cp_len
    if delay < -_SNAP:
        raise ValueError("negative arrival time: the pulse would start before its window")
    k, frac = _split_delay(max(delay, 0.0))
    start = k if frac == 0.0 else k + 1
    if start + lp > length:
        raise ValueError(
            f"guard too small: arrival at {delay:.3f} samples needs window length "
            f">= {start + lp}, have {length}"
        )
    out = np.zeros(samples.shape[:-1] + (length,), complex)
    if frac == 0.0:
        out[..., start : start + lp] = samples
        return out
    body_fd = np.fft.fft(samples[..., cp:], axis=-1)
    ramp = np.exp(2j * np.pi * np.arange(q) * (1.0 - frac) / q)
    periodic = np.fft.ifft(body_fd * ramp, axis=-1)
    idx = (np.arange(lp) - cp) % q
    out[..., start : start + lp] = periodic[..., idx]
    return out


def apply_channel_to_pulses(
    cfg: OfdmConfig,
    pulses: Sequence[IqPulse],
    ch: ChannelModel,
    guard_len: int,
    intra_doppler: bool = True,
) -> np.ndarray:
    """Propagate pulses through ``ch``; returns an (M, Q_cp+Q+guard) window array.

    Window sample n is time n*T after the pulse's nominal start; a pulse lands at
    its ``epoch`` plus each path delay.
    """
    length = cfg.pulse_len + int(guard_len)
    T = cfg.sample_interval
    out = np.zeros((len(pulses), length), complex)
    if not pulses:
        return out
    stack = np.stack([p.samples for p in pulses])
    epochs = np.array([p.epoch for p in pulses])
    m_idx = np.array([p.pulse_index for p in pulses])
    t = np.arange(length) * T
    for path in ch.paths:
        inter = path.amplitude * np.exp(2j * np.pi * m_idx * cfg.pri * path.doppler)
        for ep in np.unique(epochs):
            rows = np.flatnonzero(epochs == ep)
            delayed = delay_pulse_samples(cfg, stack[rows], (ep + path.delay) / T, length)
            delayed *= inter[rows, None]
            if intra_doppler and path.doppler != 0.0:
                delayed *= np.exp(2j * np.pi * path.doppler * t)
            out[rows] += delayed
    return out


def add_awgn(windows: np.ndarray, noise: NoiseConfig) -> np.ndarray:
    """Add circular complex Gaussian noise; window i uses its own child RNG stream."""
    windows = np.asarray(windows, complex)
    if noise.power == 0:
        return windows.copy()
    flat = windows.reshape(-1, windows.shape[-1])
    children = np.random.SeedSequence(noise.seed).spawn(flat.shape[0])
    scale = np.sqrt(noise.power / 2.0)
    out = np.empty_like(flat)
    for i, (row, ss) in enumerate(zip(flat, children)):
        rng = np.random.default_rng(ss)
        out[i] = row + scale * (rng.standard_normal(row.size) + 1j * rng.standard_normal(row.size))
    return out.reshape(windows.shape)
