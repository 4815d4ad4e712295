"""OFDM sensing pulse (S-LTF) construction, modulation and demodulation.

Transform scaling: modulation is the plain (unscaled) inverse DFT sum, demodulation
is the DFT divided by Q, so a loopback returns the symbols exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

__all__ = [
    "SPEED_OF_LIGHT",
    "OfdmConfig",
    "SltfGrid",
    "IqPulse",
    "make_sltf_grid",
    "load_sltf_sequence",
    "modulate_pulse",
    "modulate_all",
    "demodulate_pulse",
]


@dataclass(frozen=True)
class OfdmConfig:
    """Waveform constants. Defaults are the 80 MHz / 1024-subcarrier setup."""

    num_subcarriers: int = 1024
    cp_len: int = 64
    bandwidth: float = 80e6
    num_pulses: int = 128
    pri: float = 2e-3
    carrier_freq: float = 5e9

    def __post_init__(self):
        q = self.num_subcarriers
        if q < 2 or q & (q - 1):
            raise ValueError(f"num_subcarriers must be a power of two, got {q}")
        if not 0 < self.cp_len < q:
            raise ValueError(f"cp_len must satisfy 0 < cp_len < Q, got {self.cp_len}")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.num_pulses < 1:
            raise ValueError("num_pulses must be >= 1")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        # 2 ms is not an integer number of 13.6 us symbols, so only require the
        # pulse to fit inside one PRI.
        if self.pri < self.symbol_duration:
            raise ValueError("pri must be at least one OFDM symbol long")

    @property
    def sample_interval(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def subcarrier_spacing(self) -> float:
        return 1.0 / (self.num_subcarriers * self.sample_interval)

    @property
    def symbol_duration(self) -> float:
        return (self.num_subcarriers + self.cp_len) * self.sample_interval

    @property
    def pulse_len(self) -> int:
        return self.num_subcarriers + self.cp_len

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def max_doppler(self) -> float:
        """Unambiguous Doppler bound 1/(2 T_i)."""
        return 0.5 / self.pri

    def doppler_gate(self, doppler_hz):
        """Doppler in Hz to (fractional) Doppler gate M*T_i*f."""
        return np.asarray(doppler_hz) * self.num_pulses * self.pri

    def delay_gate(self, delay_s):
        return np.asarray(delay_s) / self.sample_interval


@dataclass(frozen=True)
class SltfGrid:
    """Q x M grid of BPSK symbols, identical in every column."""

    symbols: np.ndarray

    def __post_init__(self):
        x = self.symbols
        if x.ndim != 2:
            raise ValueError("symbols must be a Q x M array")
        if not np.allclose(np.abs(x), 1.0, rtol=0, atol=1e-12):
            raise ValueError("S-LTF symbols must have unit magnitude")
        if not np.array_equal(x, np.repeat(x[:, :1], x.shape[1], axis=1)):
            raise ValueError("S-LTF symbols must be identical for every pulse")

    @property
    def column(self) -> np.ndarray:
        return self.symbols[:, 0]

    @property
    def shape(self):
        return self.symbols.shape


@dataclass(frozen=True)
class IqPulse:
    """One CP-OFDM pulse at rate B. ``epoch`` is its transmit time (s) within the
    pulse's receive window; zero unless a transmission schedule moved it."""

    samples: np.ndarray
    pulse_index: int
    epoch: float = 0.0

    def with_epoch(self, epoch: float) -> "IqPulse":
        return IqPulse(self.samples, self.pulse_index, float(epoch))


def load_sltf_sequence(path, num_subcarriers: int) -> np.ndarray:
    """Read a +-1 sequence, one value per line, exactly Q lines."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) != num_subcarriers:
        raise ValueError(f"expected {num_subcarriers} symbols in {path}, found {len(lines)}")
    seq = np.array([float(v) for v in lines])
    if not np.all(np.isin(seq, (-1.0, 1.0))):
        raise ValueError(f"{path}: every symbol must be +1 or -1")
    return seq


def make_sltf_grid(cfg: OfdmConfig, seed: int = 0, sequence=None) -> SltfGrid:
    """Seeded BPSK S-LTF, or ``sequence`` (length Q, +-1) if given."""
    q, m = cfg.num_subcarriers, cfg.num_pulses
    if sequence is None:
        rng = np.random.default_rng(seed)
        col = rng.choice(np.array([-1.0, 1.0]), size=q)
    else:
        col = np.asarray(sequence, dtype=float)
        if col.shape != (q,) or not np.all(np.isin(col, (-1.0, 1.0))):
            raise ValueError("sequence must hold Q values of +-1")
    cols = np.repeat(col.astype(complex)[:, None], m, axis=1)
    return SltfGrid(cols)


def _modulate_spectrum(cfg: OfdmConfig, spectrum: np.ndarray) -> np.ndarray:
    """Unscaled IDFT along the last axis, then CP prepended."""
    body = cfg.num_subcarriers * np.fft.ifft(spectrum, axis=-1)
    return np.concatenate([body[..., -cfg.cp_len:], body], axis=-1)


def modulate_pulse(cfg: OfdmConfig, grid: SltfGrid, m: int) -> IqPulse:
    if not 0 <= m < grid.shape[1]:
        raise IndexError(f"pulse index {m} out of range [0, {grid.shape[1]})")
    return IqPulse(_modulate_spectrum(cfg, grid.symbols[:, m]), m)


def modulate_all(cfg: OfdmConfig, spectra: np.ndarray) -> list[IqPulse]:
    """Modulate every column of a Q x M spectrum grid (e.g. a jammer spectrum)."""
    rows = _modulate_spectrum(cfg, np.asarray(spectra).T)
    return [IqPulse(row, m) for m, row in enumerate(rows)]


def demodulate_pulse(cfg: OfdmConfig, window, start_offset: int) -> np.ndarray:
    """Drop the CP at ``start_offset`` and return FFT/Q of the next Q samples.

    No alignment correction is applied, so a misplaced window keeps its ISI/ICI.
    """
    window = np.asarray(window)
    begin = int(start_offset) + cfg.cp_len
    end = begin + cfg.num_subcarriers
    if begin < 0 or end > window.shape[-1]:
        raise ValueError(
            f"window of length {window.shape[-1]} too short for offset {start_offset}"
        )
    return np.fft.fft(window[..., begin:end], axis=-1) / cfg.num_subcarriers
