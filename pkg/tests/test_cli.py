import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bohmbell import batch, cli
from bohmbell.guidance import DensityUnderflowError
from bohmbell.io import read_table, validate_table


def run(*args):
    return cli.main([str(a) for a in args])


@pytest.mark.parametrize(
    "text, value",
    [("0.3", 0.3), ("pi/4", math.pi / 4), ("3pi/8", 3 * math.pi / 8), ("1/sqrt(2)", 1 / math.sqrt(2)), ("-π", -math.pi), ("2*pi", 2 * math.pi)],
)
def test_parse_number(text, value):
    assert cli.parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "__import__('os')", "1/0", "inf", "pi pi"])
def test_parse_number_rejects(text):
    with pytest.raises(Exception):
        cli.parse_number(text)


def test_validate_config(capsys, tmp_path):
    assert run("validate-config") == 0
    assert '"u": 5.0' in capsys.readouterr().out
    assert run("validate-config", "--set", "t3=0.5") == 1
    assert run("validate-config", "--set", "colour=1") == 1
    assert run("validate-config", "--set", "dt") == 1
    assert run("validate-config", "--set", "u=0.5") == 1
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sigma0": 0}))
    assert run("validate-config", "--config", cfg) == 1
    assert run("validate-config", "--config", tmp_path / "missing.json") == 2


def test_usage_errors_exit_1(tmp_path):
    for argv in ([], ["nonsense"], ["marginals", "--gammas", ""], ["chsh", "--n-theta", "0"], ["sg", "--seed", "-3"]):
        with pytest.raises(SystemExit) as info:
            run(*argv)
        assert info.value.code == 1


def test_console_script_exit_codes(tmp_path):
    r = subprocess.run([sys.executable, "-m", "bohmbell.cli", "validate-config"], capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "bohmbell.cli", "chsh", "--n-theta", "x"], capture_output=True, text=True)
    assert r.returncode == 1 and "error" in r.stderr


def test_runtime_errors_exit_2(tmp_path, monkeypatch):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("marginals", "-n", "1", "--out", blocker / "sub") == 2

    def boom(*a):
        raise DensityUnderflowError(1.0, 2.0, 3.0)

    monkeypatch.setitem(cli._COMMANDS, "sg", boom)
    assert run("sg", "--out", tmp_path) == 2


def test_invalid_input_exit_1(tmp_path):
    assert run("sg", "--c-plus", "0", "--c-minus", "0", "--out", tmp_path) == 1
    assert run("chsh", "--theta-min", "1", "--theta-max", "0", "--out", tmp_path) == 1


def test_sg(tmp_path):
    assert run("sg", "--c-plus", "1", "--c-minus", "0", "-n", "5", "--stride", "1000", "--out", tmp_path) == 0
    summary = validate_table(tmp_path / "sg_summary.csv", "sg_summary", n_rows=1)
    assert summary["fraction_up"][0] == 1.0 and summary["expected_up"][0] == 1.0
    # 10000 steps at stride 1000 give 11 samples per run
    traj = validate_table(tmp_path / "sg_trajectories.csv", "sg_trajectories", n_rows=5 * 11)
    assert list(traj["run_id"][:5]) == [0, 1, 2, 3, 4]
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "sg"


def test_sg_renormalises(tmp_path):
    with pytest.warns(UserWarning, match="renormalising"):
        assert run("sg", "--c-plus", "1", "--c-minus", "1", "-n", "2", "--out", tmp_path) == 0
    s = read_table(tmp_path / "sg_summary.csv", "sg_summary")
    assert s["expected_up"][0] == pytest.approx(0.5)


def test_trajectories_share_initial_conditions(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("trajectories", "--gamma", "0", "-n", "10", "--stride", "500", "--out", a) == 0
    assert run("trajectories", "--gamma", "pi", "-n", "10", "--stride", "500", "--out", b) == 0
    pa = validate_table(a / "pairs.csv", "pairs", n_rows=10)
    pb = validate_table(b / "pairs.csv", "pairs", n_rows=10)
    assert np.all(pa["sA"] * pa["sB"] == -1)
    assert np.all(pb["sA"] * pb["sB"] == 1)
    np.testing.assert_array_equal(pa["zA0"], pb["zA0"])
    np.testing.assert_array_equal(pa["zB0"], pb["zB0"])
    tr = validate_table(a / "trajectories.csv", "trajectories", n_rows=10 * 21)
    first = tr["t"] == 0.0
    np.testing.assert_array_equal(tr["zA"][first], pa["zA0"])
    last = tr["t"] == tr["t"].max()
    np.testing.assert_array_equal(tr["zB"][last], pa["zB"])


def test_chsh_rows_and_manifest_rerun(tmp_path):
    a = tmp_path / "a"
    assert run("chsh", "--n-theta", "3", "--n-pairs", "4", "--seed", "9", "--out", a) == 0
    t = validate_table(a / "chsh.csv", "chsh", n_rows=3)
    np.testing.assert_allclose(t["theta"], [0, 4 * math.pi / 3, 8 * math.pi / 3])
    np.testing.assert_allclose(t["M_theory"], 3 * np.cos(t["theta"] / 2) - np.cos(1.5 * t["theta"]))
    m = json.loads((a / "manifest.json").read_text())
    assert m["seed"] == 9 and m["options"]["n_theta"] == 3
    # feeding the manifest back reproduces the table byte for byte
    b = tmp_path / "b"
    assert run("chsh", "--n-theta", "3", "--n-pairs", "4", "--config", a / "manifest.json", "--out", b) == 0
    assert (a / "chsh.csv").read_bytes() == (b / "chsh.csv").read_bytes()


def test_disk_outputs(tmp_path):
    assert run("disk", "--gamma", "0", "-n", "12", "--out", tmp_path) == 0
    pts = validate_table(tmp_path / "disk_points.csv", "disk_points", n_rows=12)
    assert {(a, b) for a, b in zip(pts["sA"], pts["sB"])} <= {(1, -1), (-1, 1)}
    sep = validate_table(tmp_path / "separatrix.csv", "separatrix")
    assert set(sep["arc"]) == {"alice", "degenerate"}
    palette = json.loads((tmp_path / "palette.json").read_text())
    assert palette == {"++": "blue", "+-": "orange", "-+": "green", "--": "red"}


def test_marginals_order_independent(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("marginals", "--gammas", "0,pi/2", "-n", "6", "--out", a) == 0
    assert run("marginals", "--gammas", "pi/2,0", "-n", "6", "--out", b) == 0
    ra = (a / "marginals.csv").read_text().splitlines()
    rb = (b / "marginals.csv").read_text().splitlines()
    assert ra[0] == rb[0]
    assert ra[1:] == rb[1:][::-1]
    t = validate_table(a / "marginals.csv", "marginals", n_rows=2)
    assert np.all((t["ci_A_low"] >= 0) & (t["ci_A_high"] <= 1))


def test_workers_env(monkeypatch):
    monkeypatch.setenv(batch.WORKERS_ENV, "3")
    assert batch.default_workers() == 3
    monkeypatch.setenv(batch.WORKERS_ENV, "zero")
    with pytest.raises(ValueError):
        batch.default_workers()
    monkeypatch.setenv(batch.WORKERS_ENV, "0")
    with pytest.raises(ValueError):
        batch.default_workers()
