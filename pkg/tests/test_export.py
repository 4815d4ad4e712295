import json

import numpy as np
import pytest

from wlanjam.export import (
    FLAG_CENTERED,
    FLAG_HANN,
    export_rdm,
    pgm_pixels,
    rdm_db,
    read_detections,
    read_pgm,
    read_rdm_f32le,
    rdm_from_db,
)
from wlanjam.pipeline import run_campaign
from wlanjam.receiver import CtfEstimate, compute_rdm
from wlanjam.scenario import default_scenario


def test_pgm_mapping(tmp_path):
    grid = np.array([[1.0, 10.0], [100.0, 1000.0]])
    assert pgm_pixels(rdm_db(grid), 60).tolist() == [[0, 85], [170, 255]]
    export_rdm(grid, tmp_path / "m.pgm", "pgm", 60)
    raw = (tmp_path / "m.pgm").read_bytes()
    assert raw.startswith(b"P5\n2 2\n255\n")
    assert read_pgm(tmp_path / "m.pgm").tolist() == [[0, 85], [170, 255]]
    with pytest.raises(ValueError):
        pgm_pixels(rdm_db(grid), 0)


def test_f32le_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    h = rng.standard_normal((32, 8)) + 1j * rng.standard_normal((32, 8))
    rdm = compute_rdm(CtfEstimate(h, 0), "hann")
    path = export_rdm(rdm, tmp_path / "r.f32")
    assert path.stat().st_size == 16 + 4 * 32 * 8
    db, flags = read_rdm_f32le(path)
    assert flags == FLAG_CENTERED | FLAG_HANN
    np.testing.assert_allclose(db, rdm_db(rdm), rtol=1e-6)
    back = rdm_from_db(db, rdm.range_per_gate, rdm.speed_per_gate, flags)
    np.testing.assert_allclose(np.abs(back.grid), np.abs(rdm.grid), rtol=1e-5)
    assert back.window == "hann"


def test_f32le_rejects_garbage(tmp_path):
    p = tmp_path / "x.f32"
    p.write_bytes(b"nope")
    with pytest.raises(ValueError):
        read_rdm_f32le(p)
    p.write_bytes(b"RDM0" + (4).to_bytes(4, "little") * 2 + bytes(4) + bytes(8))
    with pytest.raises(ValueError):
        read_rdm_f32le(p)


def test_csv_value_count(tmp_path):
    export_rdm(np.ones((16, 4)), tmp_path / "r.csv", "csv")
    rows = (tmp_path / "r.csv").read_text().strip().splitlines()
    assert len(rows) == 16 and all(len(r.split(",")) == 4 for r in rows)
    with pytest.raises(ValueError):
        export_rdm(np.ones((2, 2)), tmp_path / "r.bin", "hdf5")


def test_zero_cells_are_floored():
    assert rdm_db(np.zeros((2, 2))).min() == -400.0


def test_snapshot_files(tmp_path):
    run_campaign(default_scenario(), out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["detections_k0000.json", "rdm_k0000.f32", "rdm_k0000.json", "tracks.json"]
    side = json.loads((tmp_path / "rdm_k0000.json").read_text())
    assert side["shape"] == [1024, 128]
    stream = read_detections(tmp_path)
    assert stream[0][0] == 0 and len(stream[0][1]) >= 2
