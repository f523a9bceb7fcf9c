import json

import numpy as np
import pytest

from sawcrystal import io as sio
from sawcrystal.cli import main


@pytest.fixture()
def out(tmp_path):
    return tmp_path / "out"


def test_modes_lists_the_strong_modes(out):
    assert main(["modes", "--out", str(out)]) == 0
    d = sio.read_csv(out / "modes.csv")
    keys = set(zip(d["i"].astype(int), d["j"].astype(int)))
    assert {(-2, 1), (0, 1), (0, 3), (2, 1)} <= keys
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["derived"]["L_m"] == pytest.approx(133e-6)
    assert len(manifest["config_hash"]) == 64


def test_couplings_and_dispersion(out):
    assert main(["couplings", "--out", str(out)]) == 0
    d = sio.read_csv(out / "couplings.csv")
    assert list(d) == list(sio.COUPLING_COLUMNS)
    assert np.all(d["g_over_2pi_Hz"] > 0)
    assert main(["dispersion", "--out", str(out)]) == 0
    assert "band_gap_Hz" in json.loads((out / "manifest.json").read_text())["extra"]


def test_map_is_byte_identical(tmp_path):
    cfg = tmp_path / "small.yaml"
    cfg.write_text("sweep:\n  flux_points: 21\n  f_points: 51\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["map", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["map", "--config", str(cfg), "--out", str(b), "--threads", "4"]) == 0
    assert (a / "map.csv").read_bytes() == (b / "map.csv").read_bytes()
    phi, f, t = sio.read_map(a / "map.csv")
    assert t.shape == (21, 51)


def test_trace_then_fit(tmp_path, capsys):
    cfg = tmp_path / "bare.yaml"
    # modes window far away from the sweep: an isolated atom
    cfg.write_text("modes:\n  f_min: 1.0 GHz\n  f_max: 1.1 GHz\n"
                   "sweep:\n  f_start: 2.9 GHz\n  f_stop: 3.1 GHz\n  f_points: 801\n"
                   "drive:\n  Omega: 10 kHz\n")
    out = tmp_path / "o"
    assert main(["trace", "--config", str(cfg), "--f-atom", "3.0e9", "--out", str(out)]) == 0
    assert main(["fit-lorentzian", "--input", str(out / "trace.csv"), "--out", str(out)]) == 0
    text = (out / "fit_lorentzian.txt").read_text()
    rec = dict(line.split(": ") for line in text.strip().splitlines())
    assert float(rec["gamma1_over_2pi_Hz"]) == pytest.approx(8e6, rel=0.02)
    assert float(rec["gamma2_over_2pi_Hz"]) == pytest.approx(11e6, rel=0.02)
    assert main(["fit-q", "--input", str(out / "trace.csv"), "--out", str(out)]) == 0


def test_exit_codes(tmp_path, out):
    bad = tmp_path / "bad.yaml"
    bad.write_text("lattice:\n  a: 1 um\n  P: 0.5 um\n")
    assert main(["modes", "--config", str(bad), "--out", str(out)]) == 2
    assert main(["modes", "--config", str(tmp_path / "missing.yaml"), "--out", str(out)]) == 2
    assert main(["fit-lorentzian", "--out", str(out)]) == 2
    flat = tmp_path / "flat.csv"
    f = np.linspace(3e9, 3.1e9, 101)
    sio.write_trace(flat, f, np.ones_like(f, dtype=complex))
    assert main(["fit-lorentzian", "--input", str(flat), "--out", str(out)]) == 3
    with pytest.raises(SystemExit) as info:
        main(["unknown-command"])
    assert info.value.code == 2


def test_csv_precision(tmp_path):
    path = tmp_path / "x.csv"
    sio.write_csv(path, ("a", "b"), [[1 / 3, 2e9 / 3]])
    assert path.read_text().splitlines()[1] == "0.333333333333,666666666.667"


def test_reproduce_paper_reports_every_row(out, capsys):
    status = main(["reproduce-paper", "--out", str(out), "--threads", "8"])
    rows = (out / "acceptance.txt").read_text().strip().splitlines()
    assert len(rows) == 8
    assert all(r.startswith(("[PASS]", "[FAIL]")) for r in rows)
    failed = any(r.startswith("[FAIL]") for r in rows)
    assert status == (4 if failed else 0)
    assert (out / "map.csv").exists() and (out / "qnm_quality.csv").exists()
