"""Deceptive jammer: phantom-target CTF, pre-modulated pulses, timing and kinematics.

Timing convention used throughout the package: ``delta_tau`` is the STx LOS
arrival time minus the jammer LOS arrival time at the SRx, so a positive value
means the jammer arrives first and, once it captures timing, pushes every true
echo ``delta_tau / T`` gates further out.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .waveform import SPEED_OF_LIGHT, IqPulse, OfdmConfig, SltfGrid, modulate_all

__all__ = [
    "PhantomTarget",
    "PhantomTrajectory",
    "JammerConfig",
    "artificial_ctf",
    "synthesize_jammer_pulses",
    "phantom_at_snapshot",
    "schedule_transmission",
]


@dataclass(frozen=True)
class PhantomTarget:
    amplitude: complex
    delay: float
    doppler: float = 0.0

    def __post_init__(self):
        if not self.delay > 0:
            raise ValueError(f"phantom delay must be > 0, got {self.delay}")
        if abs(self.amplitude) <= 0:
            raise ValueError("phantom amplitude must be nonzero")

    def validate(self, cfg: OfdmConfig) -> None:
        if abs(self.doppler) >= cfg.max_doppler:
            raise ValueError(
                f"phantom |doppler| {abs(self.doppler):g} Hz >= {cfg.max_doppler:g} Hz"
            )
        if self.delay >= cfg.num_subcarriers * cfg.sample_interval:
            raise ValueError("phantom delay exceeds the unambiguous range Q*T")


@dataclass(frozen=True)
class PhantomTrajectory:
    """Constant-velocity phantom: delay grows by ``delay_rate`` seconds per second.

    With ``schedule`` set, snapshot k simply returns ``schedule[k]``.
    """

    initial_delay: float = 0.0
    delay_rate: float = 0.0
    period: float = 1.0
    carrier_freq: float = 5e9
    amplitude: complex = 1.0
    schedule: tuple[PhantomTarget, ...] | None = None

    def __post_init__(self):
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(self.schedule))
            if not self.schedule:
                raise ValueError("explicit phantom schedule is empty")
        elif self.initial_delay <= 0:
            raise ValueError("initial phantom delay must be > 0")
        if self.period <= 0:
            raise ValueError("snapshot period must be positive")

    @property
    def doppler(self) -> float:
        return -self.carrier_freq * self.delay_rate


PhantomLike = Union[PhantomTarget, PhantomTrajectory]


@dataclass(frozen=True)
class JammerConfig:
    """Jammer behaviour.

    Deterministic mode (``delta_tau`` set): the jammer knows both LOS delays and
    times its pulses so they arrive ``delta_tau`` ahead of the STx LOS.
    Random mode (``epsilon_range`` set): it transmits a uniformly drawn
    ``epsilon`` seconds after the STx, redrawn per snapshot from ``seed``.
    """

    phantoms: tuple[PhantomLike, ...] = ()
    delta_tau: float | None = 0.0
    epsilon_range: tuple[float, float] | None = None
    seed: int = 0
    gain: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phantoms", tuple(self.phantoms))
        if (self.delta_tau is None) == (self.epsilon_range is None):
            raise ValueError("set exactly one of delta_tau (deterministic) or epsilon_range (random)")
        if self.epsilon_range is not None:
            lo, hi = self.epsilon_range
            if hi < lo:
                raise ValueError("epsilon_range must be (low, high) with low <= high")
        if abs(self.gain) <= 0:
            raise ValueError("jammer gain must be nonzero")

    @property
    def deterministic(self) -> bool:
        return self.delta_tau is not None

    def validate(self, cfg: OfdmConfig) -> None:
        if self.deterministic and abs(self.delta_tau) >= cfg.symbol_duration / 2:
            raise ValueError(
                f"|delta_tau| = {abs(self.delta_tau):g} s must stay below T_o/2 = {cfg.symbol_duration / 2:g} s"
            )

    def phantoms_at(self, k: int) -> list[PhantomTarget]:
        return [phantom_at_snapshot(p, k) for p in self.phantoms]


def artificial_ctf(cfg: OfdmConfig, phantoms: Sequence[PhantomTarget]) -> np.ndarray:
    """Sum of single-phantom CTFs on the Q x M grid."""
    q = np.arange(cfg.num_subcarriers)[:, None]
    m = np.arange(cfg.num_pulses)[None, :]
    out = np.zeros((cfg.num_subcarriers, cfg.num_pulses), complex)
    for ph in phantoms:
        out += (
            ph.amplitude
            * np.exp(-2j * np.pi * q * cfg.subcarrier_spacing * ph.delay)
            * np.exp(2j * np.pi * m * cfg.pri * ph.doppler)
        )
    return out


def synthesize_jammer_pulses(
    cfg: OfdmConfig, grid: SltfGrid, phantoms: Sequence[PhantomTarget], gain: complex = 1.0
) -> list[IqPulse]:
    """Pulses carrying (1 + H_bar) X: a clean S-LTF copy plus the phantom imprint."""
    if grid.shape != (cfg.num_subcarriers, cfg.num_pulses):
        raise ValueError(f"grid shape {grid.shape} does not match the OFDM config")
    for ph in phantoms:
        ph.validate(cfg)
    spectrum = gain * (1.0 + artificial_ctf(cfg, phantoms)) * grid.symbols
    return modulate_all(cfg, spectrum)


def phantom_at_snapshot(traj: PhantomLike, k: int) -> PhantomTarget:
    if k < 0:
        raise ValueError("snapshot index must be >= 0")
    if isinstance(traj, PhantomTarget):
        return traj
    if traj.schedule is not None:
        if k >= len(traj.schedule):
            raise IndexError(f"explicit phantom schedule has no snapshot {k}")
        return traj.schedule[k]
    delay = traj.initial_delay + k * traj.period * traj.delay_rate
    if delay <= 0:
        raise ValueError(f"phantom trajectory reaches non-positive delay at snapshot {k}")
    return PhantomTarget(traj.amplitude, delay, traj.doppler)


def draw_epsilon(jam: JammerConfig, k: int) -> float:
    lo, hi = jam.epsilon_range
    return float(np.random.default_rng([jam.seed, k]).uniform(lo, hi))


def schedule_transmission(
    pulses: Sequence[IqPulse],
    jam: JammerConfig,
    stx_los_delay: float,
    jammer_los_delay: float,
    stx_epoch: float = 0.0,
    snapshot: int = 0,
) -> tuple[list[IqPulse], float]:
    """Set the jammer transmit epoch; returns (shifted pulses, realised delta_tau).

    ``stx_epoch`` is when the STx transmits inside the receive window.
    """
    if jam.deterministic:
        epoch = stx_epoch + stx_los_delay - jammer_los_delay - jam.delta_tau
    else:
        epoch = stx_epoch + draw_epsilon(jam, snapshot)
    if epoch < -1e-15:
        raise ValueError(
            f"requested timing needs the jammer to transmit {-epoch:g} s before the window opens"
        )
    epoch = max(epoch, 0.0)
    delta_tau = (stx_epoch + stx_los_delay) - (epoch + jammer_los_delay)
    return [p.with_epoch(epoch) for p in pulses], delta_tau


def speed_to_delay_rate(speed: float) -> float:
    """Closing speed (m/s, display /2 convention) to phantom delay rate (s/s)."""
    return -2.0 * speed / SPEED_OF_LIGHT
