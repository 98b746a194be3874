import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sp2soliton import records
from sp2soliton.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return lines[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_integrate_gaussian(capsys):
    code, out, err = run(["integrate", "--init", "0.5,0.5,0,1", "--lambda", "1",
                          "--t-max", "10"], capsys)
    assert code == 0 and "ReachedMaxT" in err
    cols, data = csv_rows(out)
    assert cols == list(records.TRAJECTORY_COLUMNS)
    assert abs(data[-1, 0] - 10) < 1e-12 and abs(data[-1, 1] - 5) < 1e-9
    head = json.loads(out.splitlines()[0][2:])
    assert head["schema_version"] == records.SCHEMA_VERSION and head["config"]["lam"] == 1.0


def test_integrate_g_max(capsys):
    code, out, err = run(["integrate", "--b", "1", "--lambda", "1", "--g-max", "1000"], capsys)
    assert code == 0 and "ReachedMaxG" in err


@pytest.mark.parametrize("lam,b,kind", [(-1, 1.5, "AC"), (1, 1, "AC"), (-1, 1, "Extinction")])
def test_classify(capsys, lam, b, kind):
    code, out, _ = run(["classify", "--lambda", str(lam), "--b", str(b)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["kind"] == kind and doc["schema_version"] == records.SCHEMA_VERSION
    if (lam, b) == (-1, 1.5):
        assert abs(doc["fields"]["ell"] - 0.5) < 1e-4
    if (lam, b) == (1, 1):
        assert doc["fields"]["ell"] > 1


def test_lmap_sweep(capsys, tmp_path):
    path = tmp_path / "lmap.csv"
    assert run(["lmap", "--q-grid", "0.1,1,10", "--out", str(path)], capsys)[0] == 0
    text = path.read_text()
    assert "# monotone: true" in text
    cols, data = records.read_csv(path)
    ell = data[:, cols.index("ell")]
    assert len(ell) == 3 and np.all(np.diff(ell) > 0)


def test_lmap_invert_below_one(capsys):
    code, _, err = run(["lmap", "--invert", "0.5"], capsys)
    assert code == 1 and "ell must exceed 1" in err


def test_phase_grid(capsys, tmp_path):
    path = tmp_path / "phase.csv"
    assert run(["phase", "--lambda", "-1", "--grid", "50x50", "--out", str(path)], capsys)[0] == 0
    _, data = records.read_csv(path)
    assert data.shape[0] == 2500


def test_phase_trajectories(capsys, tmp_path):
    path = tmp_path / "phase.csv"
    argv = ["phase", "--grid", "3x3", "--trajectories", "4", "--traj-t-max", "2", "--out", str(path)]
    assert run(argv, capsys)[0] == 0
    cols, data = records.read_csv(tmp_path / "phase.traj.csv")
    assert cols == ["traj", "t", "alpha", "beta"] and set(data[:, 0]) == {0, 1, 2, 3}


def test_phase_needs_negative_lambda(capsys):
    assert run(["phase", "--lambda", "1"], capsys)[0] == 1


@pytest.mark.parametrize("suite", ["explicit", "odesys"])
def test_verify(capsys, suite):
    code, out, _ = run(["verify", "--suite", suite], capsys)
    assert code == 0 and "checks passed" in out


@pytest.mark.parametrize("argv", [
    ["integrate", "--lambda", "1", "--t-max", "1"],
    ["integrate", "--lambda", "1", "--b", "1"],
    ["integrate", "--b", "1", "--t-max", "1"],
    ["integrate", "--lambda", "1", "--b", "-1", "--t-max", "1"],
    ["integrate", "--lambda", "1", "--init", "1,2", "--t-max", "1"],
    ["phase", "--grid", "1x5"],
    ["lmap"],
])
def test_usage_errors(capsys, argv):
    assert run(argv, capsys)[0] == 1


def test_both_b_and_init_rejected(capsys):
    with pytest.raises(SystemExit) as e:
        main(["integrate", "--lambda", "1", "--b", "1", "--init", "1,1,0,0", "--t-max", "1"])
    assert e.value.code == 1


def test_byte_identical_reruns(capsys, tmp_path):
    argv = ["integrate", "--lambda", "-1", "--b", "1.5", "--t-max", "3"]
    texts = []
    for name in ("a.csv", "b.csv"):
        assert run(argv + ["--out", str(tmp_path / name)], capsys)[0] == 0
        texts.append((tmp_path / name).read_bytes())
    assert texts[0] == texts[1]


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('lam = 1.0\ninit = "0.5,0.5,0,1"\nmax_t = 4.0\nformat = "json"\n')
    _, out, _ = run(["integrate", "--config", str(cfg)], capsys)
    doc = json.loads(out)
    assert doc["config"]["max_t"] == 4.0 and doc["data"][-1][0] == 4.0
    _, out, _ = run(["integrate", "--config", str(cfg), "--t-max", "2"], capsys)
    assert json.loads(out)["data"][-1][0] == 2.0


def test_out_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SP2SOLITON_OUT_DIR", str(tmp_path / "outs"))
    argv = ["integrate", "--lambda", "1", "--init", "0.5,0.5,0,1", "--t-max", "1", "--out", "g.csv"]
    assert run(argv, capsys)[0] == 0
    assert (tmp_path / "outs" / "g.csv").exists()


def test_json_trajectory(capsys):
    _, out, _ = run(["integrate", "--lambda", "1", "--init", "0.5,0.5,0,1", "--t-max", "1",
                     "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["kind"] == "trajectory" and doc["columns"] == list(records.TRAJECTORY_COLUMNS)
    assert doc["termination"] == "ReachedMaxT"


@pytest.mark.xfail(strict=True, reason="the explicit shrinker is unstable forward; rounding "
                                        "drives it to extinction near t = 8")
def test_explicit_shrinker_to_t50(capsys):
    code, out, err = run(["integrate", "--lambda", "-1", "--b", "1.5", "--t-max", "50"], capsys)
    _, data = csv_rows(out)
    assert "ReachedMaxT" in err and abs(data[-1, 1] - 50) < 1e-6


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "sp2soliton", "verify", "--suite", "core"],
                       capture_output=True, text=True, cwd=tmp_path,
                       env={**os.environ, "SP2SOLITON_OUT_DIR": ""})
    assert r.returncode == 0 and "checks passed" in r.stdout
