import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlanjam.channel import ChannelModel, Path, apply_channel_to_pulses, ctf_analytic
from wlanjam.oracle import dirichlet
from wlanjam.receiver import (
    CtfEstimate,
    compute_rdm,
    correlation_magnitude,
    estimate_ctf,
    find_timing_reference,
    rdm_axes,
    signed_doppler_order,
)
from wlanjam.waveform import OfdmConfig, make_sltf_grid, modulate_pulse

from conftest import rel_err


@pytest.fixture
def ref(small_cfg, small_grid):
    return modulate_pulse(small_cfg, small_grid, 0).samples[small_cfg.cp_len :]


def _place(ref, lag, n, amp=1.0):
    out = np.zeros(n, complex)
    out[lag : lag + len(ref)] = amp * ref
    return out


def test_timing_pure_shift(small_cfg, ref):
    assert find_timing_reference(small_cfg, _place(ref, 5, 100), ref) == 5


def test_timing_stronger_copy_wins(small_cfg, ref):
    w = _place(ref, 3, 120, 0.5) + _place(ref, 19, 120, 2.0)
    mag = correlation_magnitude(w, ref)
    assert mag[19] > mag[3]
    assert find_timing_reference(small_cfg, w, ref) == 19


def test_timing_tie_picks_smallest_lag(small_cfg):
    # an impulse reference makes the two copies exactly orthogonal
    r = np.zeros(64, complex)
    r[0] = 1.0
    w = _place(r, 3, 120) + _place(r, 19, 120)
    assert find_timing_reference(small_cfg, w, r) == 3


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(1e-6, 1e6), lag=st.integers(0, 40))
def test_timing_scale_invariant(scale, lag):
    cfg = OfdmConfig(num_subcarriers=64, cp_len=16, bandwidth=20e6, num_pulses=16, pri=1e-3)
    r = modulate_pulse(cfg, make_sltf_grid(cfg, 3), 0).samples[16:]
    w = _place(r, lag, 120)
    assert find_timing_reference(cfg, scale * w, r) == find_timing_reference(cfg, w, r) == lag


def test_timing_short_window(small_cfg, ref):
    with pytest.raises(ValueError):
        find_timing_reference(small_cfg, ref[:10], ref)


def test_ctf_los_only_is_ones(small_cfg, small_grid):
    T = small_cfg.sample_interval
    pulses = [modulate_pulse(small_cfg, small_grid, m) for m in range(16)]
    win = apply_channel_to_pulses(small_cfg, pulses, ChannelModel((Path(1.0, 9 * T),)), 12)
    r = modulate_pulse(small_cfg, small_grid, 0).samples[16:]
    off = find_timing_reference(small_cfg, win[0], r) - small_cfg.cp_len
    assert off == 9
    est = estimate_ctf(small_cfg, win, off, small_grid)
    np.testing.assert_allclose(est.grid, 1.0, atol=1e-10)


def test_ctf_noise_variance(full_cfg):
    """With fft/Q demodulation, complex noise of power s2 maps to s2/Q per cell."""
    cfg = full_cfg
    grid = make_sltf_grid(cfg, 2)
    rng = np.random.default_rng(0)
    s2 = 3.0
    n = cfg.pulse_len
    noise = np.sqrt(s2 / 2) * (rng.standard_normal((cfg.num_pulses, n)) + 1j * rng.standard_normal((cfg.num_pulses, n)))
    est = estimate_ctf(cfg, noise, 0, grid)
    assert np.var(est.grid) == pytest.approx(s2 / cfg.num_subcarriers, rel=0.02)


def test_rdm_all_ones(small_cfg):
    r = compute_rdm(CtfEstimate(np.ones((64, 16), complex), 0), cfg=small_cfg)
    assert r.value(0, 0) == pytest.approx(64 * 16)
    assert np.sum(np.abs(r.grid) > 1e-9) == 1


def test_rdm_single_integer_path(full_cfg):
    T = full_cfg.sample_interval
    alpha = 0.3 - 0.4j
    ch = ChannelModel((Path(alpha, 12 * T, -9 / (128 * 2e-3)),))
    r = compute_rdm(CtfEstimate(ctf_analytic(full_cfg, ch, 0.0), 0), cfg=full_cfg)
    assert abs(r.value(12, -9)) == pytest.approx(0.5 * 1024 * 128, rel=1e-12)
    p = np.abs(r.grid)
    p[12, r.col(-9)] = 0
    assert p.max() < 1e-6


def test_rdm_fractional_range_matches_dirichlet(full_cfg):
    T = full_cfg.sample_interval
    alpha = 0.7
    ch = ChannelModel((Path(alpha, 5.5 * T),))
    r = compute_rdm(CtfEstimate(ctf_analytic(full_cfg, ch, 0.0), 0), cfg=full_cfg)
    expected = alpha * 128 * np.abs(dirichlet(1024, np.arange(1024), 5.5))
    got = np.abs(r.profile(0))
    assert np.max(np.abs(got - expected) / expected) <= 1e-9


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_rdm_is_invertible_transform_pair(seed):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((32, 8)) + 1j * rng.standard_normal((32, 8))
    r = compute_rdm(CtfEstimate(h, 0))
    order, _ = signed_doppler_order(8)
    y = np.empty_like(r.grid)
    y[:, order] = r.grid
    back = np.fft.fft(np.fft.ifft(y, axis=1), axis=0) / 32
    np.testing.assert_allclose(back, h, atol=1e-10)


def test_rdm_shift_theorem(small_cfg):
    rng = np.random.default_rng(1)
    h = rng.standard_normal((64, 16)) + 1j * rng.standard_normal((64, 16))
    q = np.arange(64)[:, None]
    shifted = h * np.exp(-2j * np.pi * q * 3 / 64)
    a = compute_rdm(CtfEstimate(h, 0), cfg=small_cfg).grid
    b = compute_rdm(CtfEstimate(shifted, 0), cfg=small_cfg).grid
    np.testing.assert_allclose(b, np.roll(a, 3, axis=0), atol=1e-9)


def test_rdm_hann_window_lowers_sidelobes(full_cfg):
    T = full_cfg.sample_interval
    h = ctf_analytic(full_cfg, ChannelModel((Path(1.0, 20.5 * T),)), 0.0)
    rect = np.abs(compute_rdm(CtfEstimate(h, 0), "rectangular", full_cfg).profile(0))
    hann = np.abs(compute_rdm(CtfEstimate(h, 0), "hann", full_cfg).profile(0))
    far = np.r_[0:10, 40:1024]
    assert np.max(hann[far]) / hann.max() < np.max(rect[far]) / rect.max() / 10
    with pytest.raises(ValueError):
        compute_rdm(CtfEstimate(h, 0), "kaiser")


def test_signed_doppler_order():
    order, gates = signed_doppler_order(8)
    assert list(gates) == [-3, -2, -1, 0, 1, 2, 3, 4]
    assert list(order) == [5, 6, 7, 0, 1, 2, 3, 4]


def test_axes(full_cfg):
    rpg, spg = rdm_axes(full_cfg)
    # physical c: 1.8737 m vs the 1.875 m obtained with c = 3e8
    assert rpg == pytest.approx(1.875, rel=2e-3)
    assert 16 * rpg == pytest.approx(30.0, rel=2e-3)
    assert 1 / (128 * 2e-3) == pytest.approx(3.90625)
    assert spg == pytest.approx(0.1171875, rel=2e-3)
    assert spg == pytest.approx(full_cfg.wavelength / 2 * 3.90625, rel=1e-12)
