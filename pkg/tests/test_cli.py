import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from amo_toolkit import cli
from amo_toolkit.nonhermitian import PointCloud


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def data_rows(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")][1:]


def test_bands_example(capsys):
    code, out, _ = run(["bands", "--alpha", "1/2", "--beta", "1", "--mode", "union"], capsys)
    assert code == 0
    rows = data_rows(out)
    assert len(rows) == 1
    lo, hi = map(float, rows[0].split(","))
    assert lo == pytest.approx(-2 * math.sqrt(2), abs=1e-12) and hi == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert "\r" not in out and out.splitlines()[-2] == "lower,upper"


def test_header_records_config(capsys):
    _, out, _ = run(["bands", "--alpha", "2/5", "--beta", "3"], capsys)
    header = [ln for ln in out.splitlines() if ln.startswith("#")]
    assert header[0] == "# command = bands"
    assert "# beta = 3.0" in header and "# mode = union" in header
    assert header[-1].startswith("# version = ")


def test_verify_duality_example(capsys):
    code, out, err = run(["verify", "duality", "--alpha", "2/5", "--beta", "3"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["pass"] is True
    assert set(doc) >= {"claim", "params", "deviations", "thresholds", "pass", "header"}
    assert "runtime" not in out and "runtime" in err


def test_invalid_alpha_names_field(capsys):
    code, _, err = run(["bands", "--alpha", "1/0", "--beta", "1"], capsys)
    assert code == 2 and "alpha" in err


def test_preset_needs_depth(capsys):
    code, _, err = run(["bands", "--alpha", "golden"], capsys)
    assert code == 2 and "depth" in err
    code, out, _ = run(["bands", "--alpha", "golden", "--depth", "30", "--qmax", "8", "--beta", "0"], capsys)
    assert code == 0 and "# alpha = golden" in out and len(data_rows(out)) == 1


def test_unknown_command(capsys):
    code, _, err = run(["frob"], capsys)
    assert code == 64 and "usage" in err


def test_bad_grid(capsys):
    code, _, err = run(["potential-field", "--alpha", "1/2", "--grid", "3:3:1:0:0:1"], capsys)
    assert code == 2 and "grid" in err


def test_numerical_failure_exit(capsys, monkeypatch):
    bad = PointCloud(np.zeros(0, complex), np.zeros(0, int), np.zeros(0, int), failed=3)
    monkeypatch.setattr(cli, "hdelta_cloud", lambda *a, **k: bad)
    code, out, err = run(["hdelta-cloud", "--alpha", "1/2", "--delta", "1.5"], capsys)
    assert code == 3 and out == "" and "3" in err


@pytest.mark.parametrize("argv", [
    ["bands", "--alpha", "3/8", "--beta", "1.5", "--mode", "fixed", "--theta", "0.3"],
    ["butterfly", "--qmax", "5", "--beta", "1"],
    ["ids", "--alpha", "2/5", "--beta", "2", "--M", "64"],
    ["lyapunov", "--alpha", "golden", "--depth", "20", "--beta", "2", "--N", "1000", "--egrid=-3:3:7"],
    ["potential-field", "--alpha", "1/2", "--M", "64", "--grid", "6:5:-3:3:-1:1"],
    ["level-curve", "--alpha", "2/5", "--beta", "2", "--delta", "1.5", "--M", "200", "--grid", "40:30:-5:5:-2:2"],
    ["hdelta-cloud", "--alpha", "2/5", "--beta", "2", "--delta", "1.5", "--ntheta", "3", "--nkappa", "4"],
    ["localize", "--alpha", "13/21", "--beta", "3", "--E", "0.5", "--N", "400"],
    ["gaps", "--alpha", "1/2", "--mode", "fixed"],
    ["verify", "equilibrium", "--alpha", "1/2", "--beta", "1", "--M", "64"],
])
def test_config_round_trip_is_byte_identical(argv, tmp_path):
    first = tmp_path / "first.out"
    second = tmp_path / "second.out"
    assert cli.main(argv + ["--out", str(first)]) == 0
    assert cli.main(["--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = bands\nalpha = 1/2\nbeta = 2\nmode = union\n")
    _, out, _ = run(["--config", str(cfg), "--beta", "0"], capsys)
    assert "# beta = 0.0" in out and data_rows(out) == ["-2.0,2.0"]


def test_csv_numbers_round_trip(capsys):
    _, out, _ = run(["ids", "--alpha", "13/21", "--beta", "2", "--M", "50"], capsys)
    for row in data_rows(out):
        for field in row.split(","):
            assert repr(float(field)) == field


def test_cloud_columns(capsys):
    _, out, _ = run(["hdelta-cloud", "--alpha", "2/5", "--beta", "2", "--delta", "1.5", "--ntheta", "3", "--nkappa", "4"], capsys)
    rows = data_rows(out)
    assert len(rows) == 3 * 4 * 5
    assert out.splitlines()[[ln.startswith("#") for ln in out.splitlines()].index(False)] == "re,im,theta_index,kappa_index"


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "bands.csv"
    target.write_text("old")
    assert cli.main(["bands", "--alpha", "1/2", "--out", str(target)]) == 0
    assert os.listdir(tmp_path) == ["bands.csv"]
    assert target.read_text().startswith("# command = bands")


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "amo_toolkit.cli", "gaps", "--alpha", "1/2", "--mode", "fixed"],
                         capture_output=True, text=True, check=True)
    doc = json.loads(res.stdout)
    assert doc["band_count"] == 2 and doc["gaps"][0][2] == pytest.approx(4.0)
