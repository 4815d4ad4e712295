"""Victim SRx: correlation timing, CTF estimation and range/Doppler maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .waveform import SPEED_OF_LIGHT, OfdmConfig, SltfGrid, demodulate_pulse

__all__ = [
    "CtfEstimate",
    "Rdm",
    "find_timing_reference",
    "correlation_magnitude",
    "estimate_ctf",
    "compute_rdm",
    "rdm_axes",
    "signed_doppler_order",
]

# Correlation peaks within this relative margin of the maximum count as a tie.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class CtfEstimate:
    grid: np.ndarray
    timing_offset: int


@dataclass(frozen=True)
class Rdm:
    """Range/Doppler map. Columns are ordered by ascending signed Doppler gate."""

    grid: np.ndarray
    doppler_gates: np.ndarray
    range_per_gate: float
    speed_per_gate: float
    window: str = "rectangular"

    def __post_init__(self):
        if self.grid.ndim != 2 or self.grid.shape[1] != len(self.doppler_gates):
            raise ValueError("grid columns must match the Doppler gate list")
        if self.range_per_gate <= 0 or self.speed_per_gate <= 0:
            raise ValueError("axis scalings must be positive")

    @property
    def shape(self):
        return self.grid.shape

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.grid) ** 2

    def col(self, doppler_gate: int) -> int:
        """Column index of a signed Doppler gate (wrapped into the grid)."""
        m = self.grid.shape[1]
        v = int(doppler_gate) % m
        hits = np.flatnonzero(self.doppler_gates % m == v)
        return int(hits[0])

    def profile(self, doppler_gate: int) -> np.ndarray:
        return self.grid[:, self.col(doppler_gate)]

    def value(self, range_gate: int, doppler_gate: int) -> complex:
        return self.grid[int(range_gate) % self.grid.shape[0], self.col(doppler_gate)]


def signed_doppler_order(m: int) -> tuple[np.ndarray, np.ndarray]:
    """(column order, signed gates): gate v > M/2 is read as v - M."""
    v = np.arange(m)
    signed = np.where(v > m / 2, v - m, v)
    order = np.argsort(signed, kind="stable")
    return order, signed[order]


def rdm_axes(cfg: OfdmConfig) -> tuple[float, float]:
    """(metres per range gate, m/s per Doppler gate), both with the /2 convention."""
    range_per_gate = SPEED_OF_LIGHT * cfg.sample_interval / 2.0
    speed_per_gate = cfg.wavelength / (2.0 * cfg.num_pulses * cfg.pri)
    return range_per_gate, speed_per_gate


def correlation_magnitude(window, reference) -> np.ndarray:
    """|sum_n window[lag+n] conj(reference[n])| for every full-overlap lag."""
    return np.abs(signal.correlate(np.asarray(window), np.asarray(reference), mode="valid"))


def find_timing_reference(cfg: OfdmConfig, window, reference) -> int:
    """Lag of the strongest correlation peak (smallest lag among ties)."""
    window = np.asarray(window)
    if window.shape[-1] < len(reference):
        raise ValueError("window shorter than the reference")
    mag = correlation_magnitude(window, reference)
    return int(np.flatnonzero(mag >= mag.max() * (1 - TIE_RTOL))[0])


def estimate_ctf(cfg: OfdmConfig, windows, offset: int, grid: SltfGrid) -> CtfEstimate:
    """Per-pulse demodulation at CP-start ``offset`` divided by the known symbols."""
    windows = np.atleast_2d(windows)
    spectra = demodulate_pulse(cfg, windows, offset).T
    return CtfEstimate(spectra / grid.symbols[:, : spectra.shape[1]], int(offset))


def _window(kind: str, n: int) -> np.ndarray:
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        return np.hanning(n)
    raise ValueError(f"unknown window {kind!r}")


def compute_rdm(ctf: CtfEstimate, window: str = "rectangular", cfg: OfdmConfig | None = None) -> Rdm:
    """IDFT over subcarriers (unscaled sum) and DFT over pulses."""
    h = np.asarray(ctf.grid)
    q, m = h.shape
    weighted = h * _window(window, q)[:, None] * _window(window, m)[None, :]
    y = np.fft.fft(q * np.fft.ifft(weighted, axis=0), axis=1)
    order, gates = signed_doppler_order(m)
    if cfg is None:
        cfg = OfdmConfig(num_subcarriers=q, cp_len=max(1, q // 16), num_pulses=m)
    rpg, spg = rdm_axes(cfg)
    return Rdm(y[:, order], gates, rpg, spg, window)
