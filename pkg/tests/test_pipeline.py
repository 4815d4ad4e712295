import json
from dataclasses import replace

import numpy as np
import pytest

from wlanjam.jammer import JammerConfig
from wlanjam.oracle import jammed_rdm_analytic, true_rdm_analytic
from wlanjam.pipeline import (
    peak_to_profile_db,
    phantom_cells,
    receive_windows,
    run_campaign,
    run_snapshot,
    sweep,
    true_target_cell,
    wrap_gate,
)
from wlanjam.receiver import correlation_magnitude
from wlanjam.scenario import ScenarioError, default_scenario, load_scenario, scenario_from_dict
from wlanjam.waveform import modulate_pulse

from conftest import rel_err


@pytest.fixture(scope="module")
def case1():
    return default_scenario()


def test_default_scenario_is_case_one(case1):
    cfg = case1.ofdm
    assert (cfg.num_subcarriers, cfg.cp_len, cfg.bandwidth, cfg.num_pulses, cfg.pri) == (1024, 64, 80e6, 128, 2e-3)
    assert case1.jammer.delta_tau == pytest.approx(16 * cfg.sample_interval)
    ratio = abs(case1.jammer_channel().los.amplitude) / abs(case1.stx_channel().los.amplitude)
    assert 20 * np.log10(ratio) == pytest.approx(7.0)


def test_superposition(case1):
    rx = receive_windows(case1, 0, noise=False)
    np.testing.assert_array_equal(rx.total, rx.stx + rx.jammer)
    assert rx.stx_arrival - rx.jammer_arrival == pytest.approx(16.0)
    noisy = receive_windows(case1, 0, noise=True)
    assert np.mean(np.abs(noisy.total - rx.total) ** 2) == pytest.approx(0.01, rel=0.02)


def test_unjammed_matches_oracle(case1):
    sc = replace(case1, jammer=None, intra_doppler=False)
    res = run_snapshot(sc, noise=False)
    assert res.captured_by == "stx"
    ch = sc.stx_channel()
    oracle = true_rdm_analytic(sc.ofdm, ch, ch.los.delay)
    assert rel_err(res.rdm.grid, oracle.grid) <= 1e-9
    assert [(d.range_gate, d.doppler_gate) for d in res.detections] == [true_target_cell(sc)]


def test_case_one_matches_jammed_oracle(case1):
    sc = replace(case1, intra_doppler=False)
    res = run_snapshot(sc, noise=False)
    assert res.captured_by == "jammer"
    oracle = jammed_rdm_analytic(
        sc.ofdm, sc.stx_channel(), sc.jammer_channel(), sc.jammer.phantoms_at(0), sc.jammer.delta_tau, sc.jammer.gain
    )
    assert rel_err(res.rdm.grid, oracle.grid) <= 1e-9


def test_case_one_with_noise(case1):
    res = run_snapshot(case1)
    cells = {(d.range_gate, d.doppler_gate) for d in res.detections}
    l0, v0 = true_target_cell(case1)
    assert (l0 + 16, v0) in cells
    assert phantom_cells(case1)[0] in cells
    assert res.meta["delta_tau_samples"] == pytest.approx(16.0)


def test_campaign_single_snapshot_and_determinism(case1, tmp_path):
    a = run_campaign(case1, out_dir=tmp_path / "a")
    b = run_campaign(case1, out_dir=tmp_path / "b")
    assert len(a.snapshots) == 1
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    c = run_campaign(replace(case1, seed=1))
    assert not np.array_equal(a.snapshots[0].rdm.grid, c.snapshots[0].rdm.grid)
    with pytest.raises(ValueError):
        run_campaign(case1, snapshots=0)


def test_random_epsilon_mode(case1):
    T = case1.ofdm.sample_interval
    jam = JammerConfig(case1.jammer.phantoms, delta_tau=None, epsilon_range=(0.0, 10 * T), seed=3)
    sc = replace(case1, jammer=jam)
    r0, r1 = receive_windows(sc, 0, False), receive_windows(sc, 1, False)
    assert r0.epsilon != r1.epsilon
    assert receive_windows(sc, 0, False).epsilon == r0.epsilon


def test_sweep_delta_tau(case1):
    rows = sweep(case1, "delta_tau", [0, 16, 40], noise=False)
    assert [r["true_gate_shift"] for r in rows] == [0, 16, 40]
    # simultaneous arrival: the tie is reported as STx capture
    assert [r["jammer_captured"] for r in rows] == [False, True, True]
    assert all(r["phantom_detected"] for r in rows)


def test_sweep_jammer_gain_crossover(case1):
    gains = [0.2, 0.4, 0.43, 0.47, 0.5, 1.0]
    rows = sweep(case1, "jammer_gain", gains, noise=False)
    cfg = case1.ofdm
    ref = modulate_pulse(cfg, case1.sltf_grid(), 0).samples[cfg.cp_len :]
    for g, row in zip(gains, rows):
        sc = replace(case1, jammer=replace(case1.jammer, gain=complex(g)))
        rx = receive_windows(sc, 0, noise=False)
        stx_peak = correlation_magnitude(rx.stx[0], ref).max()
        jam_peak = correlation_magnitude(rx.jammer[0], ref).max()
        assert row["jammer_captured"] == (jam_peak > stx_peak), g
    flags = [r["jammer_captured"] for r in rows]
    assert flags[0] is False and flags[-1] is True


def test_sweep_phantom_speed_and_errors(case1):
    rows = sweep(case1, "phantom_speed", [0.0, 1.5], snapshots=1, noise=False)
    # a static phantom falls inside the zero-Doppler exclusion
    assert [r["phantom_detected"] for r in rows] == [False, True]
    with pytest.raises(ValueError):
        sweep(case1, "bandwidth", [1.0])
    with pytest.raises(ValueError):
        sweep(case1, "delta_tau", [])
    with pytest.raises(ValueError):
        sweep(replace(case1, jammer=None), "delta_tau", [1.0])


def test_metrics_helpers(case1):
    res = run_snapshot(case1, noise=False)
    assert peak_to_profile_db(res.rdm, 10) <= 0
    assert wrap_gate(1023, 1024) == -1
    assert wrap_gate(16, 1024) == 16


# scenario file parsing -----------------------------------------------------

def _base():
    return json.loads(json.dumps({
        "ofdm": {"num_subcarriers": 64, "cp_len": 16, "bandwidth": 20e6, "num_pulses": 16, "pri": 1e-3},
        "links": {"stx": [{"delay_samples": 2}, {"delay_s": 5e-7, "amplitude": [0, 0.1], "doppler_hz": 62.5}]},
    }))


def test_parse_minimal_and_units():
    sc = scenario_from_dict(_base())
    ch = sc.stx_channel()
    assert ch.paths[1].amplitude == pytest.approx(0.1j)
    assert ch.paths[1].delay == pytest.approx(10 * sc.ofdm.sample_interval)
    assert sc.jammer is None


@pytest.mark.parametrize("mutate", [
    lambda d: d["links"]["stx"][0].pop("delay_samples"),
    lambda d: d.update(snapshots=0),
    lambda d: d["links"]["stx"].append({"delay_samples": 1, "doppler_hz": 600}),
    lambda d: d.update(jammer={"delta_tau_samples": 4}),
    lambda d: d.update(window="blackman"),
    lambda d: d["ofdm"].update(num_subcarriers=60),
    lambda d: d.update(cfar={"pfa": 2}),
])
def test_parse_errors(mutate):
    d = _base()
    mutate(d)
    with pytest.raises(ScenarioError):
        scenario_from_dict(d)


def test_jammer_and_trajectory_parsing():
    d = _base()
    d["links"]["jammer"] = [{"delay_samples": 1, "amplitude_db": 6}]
    d["jammer"] = {
        "epsilon_range_s": [0, 1e-7], "seed": 4, "gain_db": -6,
        "phantoms": [{"trajectory": {"initial_delay_samples": 10, "speed_mps": 2.0, "amplitude_db": -20}}],
    }
    sc = scenario_from_dict(d)
    assert not sc.jammer.deterministic
    assert abs(sc.jammer.gain) == pytest.approx(10 ** (-6 / 20))
    assert sc.jammer.phantoms_at(1).pop().delay < sc.jammer.phantoms_at(0).pop().delay


def test_geometry_scenario(tmp_path):
    d = _base()
    del d["links"]
    d["geometry"] = {"stx": [0, 0], "srx": [10, 0], "jammer": [4, 3],
                     "targets": [{"position": [5, 5], "velocity": [0, -1]}]}
    d["jammer"] = {"delta_tau_samples": 2}
    d["snapshot_period_s"] = 0.5
    path = tmp_path / "g.json"
    path.write_text(json.dumps(d))
    sc = load_scenario(path)
    assert sc.stx_channel(0).los.delay == pytest.approx(10 / 299792458)
    assert sc.stx_channel(1).paths[1].delay < sc.stx_channel(0).paths[1].delay
    assert len(sc.jammer_channel()) == 2


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(bad)
    bad.write_text("[]")
    with pytest.raises(ScenarioError):
        load_scenario(bad)
    with pytest.raises(OSError):
        load_scenario(tmp_path / "missing.json")
