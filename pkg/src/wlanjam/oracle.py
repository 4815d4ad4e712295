"""Closed-form range/Doppler maps built from Dirichlet kernels."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .channel import ChannelModel
from .jammer import PhantomTarget
from .receiver import Rdm, rdm_axes, signed_doppler_order
from .waveform import OfdmConfig

__all__ = ["dirichlet", "dirichlet_sum", "rdm_from_points", "true_rdm_analytic", "jammed_rdm_analytic"]


def dirichlet(n: int, y, x):
    """D_N(y, x) = sum_{k<N} exp(j 2 pi k (y-x) / N), evaluated in closed form.

    The offset is reduced modulo N first and the sine ratio is written with
    ``np.sinc``, which removes the singularity at integer multiples of N.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r = d - n * np.round(d / n)
    mag = n * np.sinc(r) / np.sinc(r / n)
    return np.exp(1j * np.pi * (n - 1) / n * r) * mag


def dirichlet_sum(n: int, y, x):
    """Brute-force N-term geometric sum; reference for :func:`dirichlet`."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    k = np.arange(n).reshape((n,) + (1,) * d.ndim)
    return np.exp(2j * np.pi * k * d / n).sum(axis=0)


def rdm_from_points(cfg: OfdmConfig, points) -> Rdm:
    """Sum of point responses; ``points`` holds (amplitude, range gate, Doppler gate)."""
    q, m = cfg.num_subcarriers, cfg.num_pulses
    _, gates = signed_doppler_order(m)
    l = np.arange(q)
    out = np.zeros((q, m), complex)
    for amp, lp, vp in points:
        out += amp * np.outer(dirichlet(q, l, lp), dirichlet(m, vp, gates))
    rpg, spg = rdm_axes(cfg)
    return Rdm(out, gates, rpg, spg)


def _true_points(cfg: OfdmConfig, ch: ChannelModel, ref_delay: float, shift: float = 0.0):
    T = cfg.sample_interval
    return [
        (p.amplitude, (p.delay - ref_delay) / T + shift, float(cfg.doppler_gate(p.doppler)))
        for p in ch.paths
    ]


def true_rdm_analytic(cfg: OfdmConfig, ch: ChannelModel, ref_delay: float) -> Rdm:
    """Noiseless RDM of one link with the timing reference at ``ref_delay``."""
    return rdm_from_points(cfg, _true_points(cfg, ch, ref_delay))


def jammed_rdm_analytic(
    cfg: OfdmConfig,
    true_ch: ChannelModel | None,
    jam_ch: ChannelModel,
    phantoms: Sequence[PhantomTarget],
    delta_tau: float,
    gain: complex = 1.0,
) -> Rdm:
    """Noiseless RDM when the jammer LOS is the timing reference.

    True echoes move by +delta_tau/T gates; the jammer link and every phantom
    replica are placed relative to the jammer LOS delay.
    """
    T = cfg.sample_interval
    points = []
    if true_ch is not None:
        points += _true_points(cfg, true_ch, true_ch.los.delay, shift=delta_tau / T)
    ref = jam_ch.los.delay
    for p in jam_ch.paths:
        amp = gain * p.amplitude
        points.append((amp, (p.delay - ref) / T, float(cfg.doppler_gate(p.doppler))))
        for ph in phantoms:
            points.append(
                (
                    amp * ph.amplitude,
                    (p.delay - ref + ph.delay) / T,
                    float(cfg.doppler_gate(p.doppler + ph.doppler)),
                )
            )
    return rdm_from_points(cfg, points)
