import hashlib
import json
import math
import time

import numpy as np
import polars as pl
import pytest

from pantoguide import kinematics as kin
from pantoguide.analysis import io as aio
from pantoguide.cli import build_parser, main
from pantoguide.synth import reference_choice_log


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def values(out):
    return {line.split()[0]: line.split()[1:] for line in out.splitlines() if line.strip()}


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_fk_matches_library(capsys, cfg):
    code, out, _ = run(capsys, "fk", "--theta1-deg", "90", "--theta2-deg", "90")
    assert code == 0
    p = kin.forward_kinematics(cfg, kin.JointAngles(math.pi / 2, math.pi / 2))
    v = values(out)
    assert float(v["u_mm"][0]) == pytest.approx(p.u, abs=1e-6)
    assert float(v["v_mm"][0]) == pytest.approx(p.v, abs=1e-6)


def test_ik_roundtrip(capsys):
    _, out, _ = run(capsys, "fk", "--theta1-deg", "90", "--theta2-deg", "90")
    v = values(out)
    code, out, _ = run(capsys, "ik", "--u-mm", v["u_mm"][0], "--v-mm", v["v_mm"][0])
    assert code == 0
    angles = values(out)
    assert float(angles["theta1_deg"][0]) == pytest.approx(90.0, abs=1e-4)
    assert float(angles["theta2_deg"][0]) == pytest.approx(90.0, abs=1e-4)


def test_ik_roundtrip_at_center(capsys, cfg):
    c = kin.workspace_center(cfg)
    _, out, _ = run(capsys, "ik", "--u-mm", repr(c.u), "--v-mm", repr(c.v))
    a = values(out)
    _, out, _ = run(capsys, "fk", "--theta1-deg", a["theta1_deg"][0], "--theta2-deg", a["theta2_deg"][0])
    p = values(out)
    assert float(p["u_mm"][0]) == pytest.approx(c.u, abs=1e-5)
    assert float(p["v_mm"][0]) == pytest.approx(c.v, abs=1e-5)


@pytest.mark.parametrize("u, v", [("0", "-40"), ("0", "5"), ("100", "-10")])
def test_ik_unreachable(capsys, u, v):
    code, out, err = run(capsys, "ik", "--u-mm", u, "--v-mm", v)
    assert code == 1 and out == ""
    assert "out of workspace" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fk", "--theta1-deg", "abc", "--theta2-deg", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_bad_config_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("loop:\n  speed: 1\n")
    code, _, err = run(capsys, "--config", str(bad), "fk", "--theta1-deg", "0", "--theta2-deg", "0")
    assert code == 2 and "unknown keys" in err


def test_env_config_used(capsys, tmp_path, monkeypatch):
    f = tmp_path / "c.yaml"
    f.write_text("pantograph:\n  lower_link_mm: 14\n")
    monkeypatch.setenv("PANTOGUIDE_CONFIG", str(f))
    _, out, _ = run(capsys, "fk", "--theta1-deg", "90", "--theta2-deg", "90")
    alt = kin.PantographConfig(lower_link_b=14.0)
    p = kin.forward_kinematics(alt, kin.JointAngles(math.pi / 2, math.pi / 2))
    assert float(values(out)["v_mm"][0]) == pytest.approx(p.v, abs=1e-6)


def test_force_map_default(capsys, tmp_path, cfg):
    out_csv = tmp_path / "fm.csv"
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "force-map", "--out", str(out_csv), "--resolution", "100")
    assert time.perf_counter() - t0 < 5.0
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "u_mm,v_mm,force_N,reachable"
    assert len(lines) == 10001
    df = pl.read_csv(out_csv)
    grid = df["force_N"].to_numpy().reshape(100, 100)
    assert np.abs(grid - grid[:, ::-1]).max() <= 1e-9 * max(1.0, grid.max())
    c = kin.workspace_center(cfg)
    centre = [float(x) for x in values(out)["workspace_center_mm"]]
    assert centre == pytest.approx([c.u, c.v], abs=1e-6)


def test_force_map_literal_center_matches_grid(capsys, tmp_path):
    conf = tmp_path / "lit.yaml"
    conf.write_text("cue:\n  region_radius_mm: 0.0\n  reach_clearance_mm: 0.0\n")
    out_csv = tmp_path / "fm.csv"
    code, out, _ = run(capsys, "--config", str(conf), "force-map", "--out", str(out_csv))
    assert code == 0
    df = pl.read_csv(out_csv)
    best = df.row(int(df["force_N"].arg_max()), named=True)
    cu, cv = (float(x) for x in values(out)["workspace_center_mm"])
    spacing = 60.0 / 99
    assert math.hypot(best["u_mm"] - cu, best["v_mm"] - cv) <= spacing


def test_force_map_unwritable(capsys, tmp_path):
    code, _, err = run(capsys, "force-map", "--out", str(tmp_path / "no" / "fm.csv"), "--resolution", "5")
    assert code == 1 and "cannot write" in err


def test_simulate_default(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--out", str(tmp_path))
    assert code == 0
    csvs = sorted(tmp_path.glob("cue*.csv"))
    assert len(csvs) == 8
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["cues"]) == 8
    for entry in summary["cues"]:
        assert entry["max_error_mm"] < 0.3


def test_simulate_deterministic(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"direction": "TiltRight"}]))
    for name in ("a", "b"):
        assert run(capsys, "simulate", "--script", str(script), "--out", str(tmp_path / name))[0] == 0
    for f in ("cue00_TiltRight.csv", "summary.json"):
        assert digest(tmp_path / "a" / f) == digest(tmp_path / "b" / f)


def test_simulate_zero_amplitude(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"direction": "Up", "amplitude_mm": 0}]))
    code, _, _ = run(capsys, "simulate", "--script", str(script), "--out", str(tmp_path / "o"))
    assert code == 0
    entry = json.loads((tmp_path / "o" / "summary.json").read_text())["cues"][0]
    assert entry["max_error_mm"] == 0.0 and entry["rms_error_mm"] == 0.0


def test_simulate_beyond_workspace(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"direction": "Down", "amplitude_mm": 50}]))
    code, _, err = run(capsys, "simulate", "--script", str(script), "--out", str(tmp_path / "o"))
    assert code == 1 and "validate_cue_region" in err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("body", ['[{"direction": "Up", "speed": 1}]', "{", '"Up"'])
def test_simulate_bad_script(capsys, tmp_path, body):
    script = tmp_path / "s.json"
    script.write_text(body)
    code, _, err = run(capsys, "simulate", "--script", str(script), "--out", str(tmp_path / "o"))
    assert code == 2 and "cue script" in err


def test_simulate_missing_script(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--script", str(tmp_path / "x.json"), "--out", str(tmp_path))
    assert code == 1


def test_synth_small_and_fast(capsys, tmp_path):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "synth", "--out", str(tmp_path / "a"), "--subjects", "2", "--seed", "3")
    assert time.perf_counter() - t0 < 1.0
    assert code == 0
    assert "Part1 160, Part2 48, Part3 160" in out
    code, out2, _ = run(capsys, "synth", "--out", str(tmp_path / "b"), "--subjects", "2", "--seed", "3")
    assert out2 == out
    code, out3, _ = run(capsys, "synth", "--out", str(tmp_path / "c"), "--subjects", "2", "--seed", "4")
    assert values(out3)["sha256"] != values(out)["sha256"]


def test_synth_rejects_zero_subjects(capsys, tmp_path):
    code, _, err = run(capsys, "synth", "--out", str(tmp_path), "--subjects", "0")
    assert code == 2


def test_analyze_reference_fixture(capsys, tmp_path):
    logs = tmp_path / "logs"
    logs.mkdir()
    aio.write_choices(reference_choice_log(), logs / "part2_choices.csv")
    code, out, _ = run(capsys, "analyze", str(logs), "--out", str(tmp_path / "rep"))
    assert code == 0
    assert values(out)["overall_percent_correct"] == ["94.8"]
    rows = (tmp_path / "rep" / "confusion.csv").read_text().splitlines()
    assert rows[4] == "Down,1.7,1.7,3.3,91.7,0.0,0.0,1.7,0.0"


def test_analyze_small_study_deterministic(capsys, tmp_path):
    assert run(capsys, "synth", "--out", str(tmp_path / "s"), "--subjects", "3", "--seed", "1")[0] == 0
    for name in ("r1", "r2"):
        code, out, _ = run(capsys, "analyze", str(tmp_path / "s"), "--out", str(tmp_path / name))
        assert code == 0
    assert "cluster_sizes" in values(out)
    for f in ("report.json", "peaks.csv", "trial_features.csv", "confusion.csv"):
        assert digest(tmp_path / "r1" / f) == digest(tmp_path / "r2" / f)


def test_analyze_empty_dir(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", str(tmp_path), "--out", str(tmp_path / "r"))
    assert code == 1 and "no trials found" in err


def test_analyze_schema_error_names_line(capsys, tmp_path):
    logs = tmp_path / "logs"
    logs.mkdir()
    (logs / "part2_choices.csv").write_text(
        "subject_id,trial_index,cue,response,repeats\nS01,0,Up,Up,0\nS01,1,Up\n"
    )
    code, _, err = run(capsys, "analyze", str(logs), "--out", str(tmp_path / "r"))
    assert code == 1 and "part2_choices.csv:3" in err


def test_default_config(capsys, tmp_path):
    code, out, _ = run(capsys, "default-config")
    assert code == 0 and "upper_link_mm: 10.0" in out
    target = tmp_path / "d.yaml"
    assert run(capsys, "default-config", "--out", str(target))[0] == 0
    assert target.read_text() == out


UNIT_HINTS = {
    "fk": ["deg", "mm"],
    "ik": ["deg", "mm"],
    "force-map": ["mm", "N"],
    "simulate": ["mm"],
    "synth": ["s", "mm", "deg"],
    "analyze": ["s", "mm"],
    "default-config": ["units"],
}


@pytest.mark.parametrize("command", sorted(UNIT_HINTS))
def test_help_documents_units(capsys, command):
    with pytest.raises(SystemExit) as exc:
        main([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for hint in UNIT_HINTS[command]:
        assert hint in text.replace(",", " ").replace("(", " ").replace(")", " ").split()


def test_parser_lists_all_commands():
    text = build_parser().format_help()
    for command in UNIT_HINTS:
        assert command in text
