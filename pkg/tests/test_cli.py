import json
import subprocess
import sys

import numpy as np
import pytest

from loewner_lab.cli import main
from loewner_lab.conformal import PlanarCurve, hausdorff, read_curve, segment_chord, write_curve
from loewner_lab.loewner import DrivingFunction, read_driving, solve_forward, write_driving

SUBCOMMANDS = ("drive", "trace", "energy", "loopmass", "verify")


@pytest.fixture
def seg(tmp_path):
    p = tmp_path / "seg.curve"
    write_curve(p, segment_chord(2j, 500))
    return p


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([sub, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_unknown_flag_exits_nonzero(seg, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["drive", str(seg), "--bogus"])
    assert exc.value.code != 0


def test_drive_segment(seg, tmp_path):
    out = tmp_path / "seg.drv"
    assert main(["drive", str(seg), "-n", "500", "-o", str(out)]) == 0
    w = read_driving(out)
    assert np.max(np.abs(w.values)) < 1e-3


def test_drive_not_simple(tmp_path, capsys):
    p = tmp_path / "bad.curve"
    write_curve(p, PlanarCurve([0, 1j, 1 + 2j, 2 + 1j, -1 + 1.5j]))
    assert main(["drive", str(p)]) == 2
    assert "NotSimple" in capsys.readouterr().err


def test_drive_trace_round_trip(tmp_path):
    w = DrivingFunction.from_function(lambda t: 0.4 * np.sin(3 * t), 1.0, 20000)
    chord = solve_forward(w)
    c = tmp_path / "c.curve"
    write_curve(c, chord)
    d = tmp_path / "c.drv"
    back = tmp_path / "back.curve"
    assert main(["drive", str(c), "-n", "2000", "-o", str(d)]) == 0
    assert main(["trace", str(d), "-o", str(back)]) == 0
    assert hausdorff(read_curve(back).points, chord.points) < 1e-2


def test_energy_json_and_csv(tmp_path, capsys):
    d = tmp_path / "lin.drv"
    write_driving(d, DrivingFunction.from_function(lambda t: 1.5 * t, 2.0, 10))
    assert main(["energy", str(d), "--no-timestamp"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["value"] == pytest.approx(2.25)
    assert out["config"]["subcommand"] == "energy"
    assert main(["energy", str(d), "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "key,value" and "value,2.25" in lines


def test_loop_energy_command(tmp_path, capsys):
    from loewner_lab.conformal import circle
    p = tmp_path / "circle.curve"
    write_curve(p, circle(4096))
    assert main(["energy", str(p), "--mode", "loop", "-n", "1000", "--no-timestamp"]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["value"] < 1e-2


def test_loopmass_byte_identical(capsys):
    argv = ["loopmass", "--set", "segment:0,2j", "--set", "semidisk:2,1", "--domain", "H",
            "--samples", "1500", "--seed", "3", "--no-timestamp"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv + ["--threads", "2"]) == 0
    second = json.loads(capsys.readouterr().out)
    assert json.loads(first)["result"] == second["result"]
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_precedence(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1, "samples": 800}))
    base = ["loopmass", "--kind", "brownian", "--set", "segment:0,2j", "--set", "semidisk:2,1",
            "--no-timestamp", "--config", str(cfg)]
    monkeypatch.delenv("LOEWNER_LAB_SEED", raising=False)
    main(base)
    assert json.loads(capsys.readouterr().out)["config"]["seed"] == 1
    monkeypatch.setenv("LOEWNER_LAB_SEED", "2")
    main(base)
    assert json.loads(capsys.readouterr().out)["config"]["seed"] == 2
    main(base + ["--seed", "3"])
    got = json.loads(capsys.readouterr().out)
    assert got["config"]["seed"] == 3 and got["result"]["seed"] == 3
    assert got["config"]["samples"] == 800


def test_verify_writes_reports(tmp_path, capsys):
    out = tmp_path / "rep"
    argv = ["verify", "chordal_restriction", "-n", "1000", "--out-dir", str(out), "--no-timestamp"]
    assert main(argv) == 0
    first = (out / "00_chordal_restriction.json").read_bytes()
    index = json.loads((out / "index.json").read_text())
    assert index[0]["pass"] is True
    assert main(argv) == 0
    assert (out / "00_chordal_restriction.json").read_bytes() == first
    assert json.loads(capsys.readouterr().out.split("\n}\n")[0] + "\n}")["result"]["all_pass"]


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "loewner_lab.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "drive" in r.stdout
    r = subprocess.run([sys.executable, "-m", "loewner_lab.cli", "nosuch"], capture_output=True, text=True)
    assert r.returncode == 2
