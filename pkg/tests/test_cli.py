import json
import subprocess
import sys

import pytest

from conftest import make_stance
from gaitlp import io
from gaitlp.cli import main
from gaitlp.metrics import TouchdownEvent, TrackingLog, TrackingRecord


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "flat.json").write_text(json.dumps({"kind": "FlatWorld", "seed": 0, "params": {"side": 12.0}}))
    assert main(["model", "init", "--out", str(tmp_path / "model.json")]) == 0
    return tmp_path


def test_terrain_gen(workdir, capsys):
    assert main(["terrain", "gen", "--scenario", str(workdir / "flat.json"), "--out", str(workdir / "map.json"),
                 "--pgm", str(workdir / "map.pgm")]) == 0
    hm = io.load_heightmap(workdir / "map.json")
    assert hm.n_rows == 300 and (workdir / "map.pgm").exists() and (workdir / "map.pgm.json").exists()


def test_feascheck_exit_codes(workdir, capsys):
    ph = make_stance((6.0, 6.0))
    io.save_phase(ph, workdir / "a.json")
    io.save_phase(ph.replace(r_B=ph.r_B + [10, 0, 0]), workdir / "b.json")
    args = ["feascheck", "--from", str(workdir / "a.json"), "--model", str(workdir / "model.json")]
    assert main(args + ["--to", str(workdir / "a.json")]) == 0
    assert main(args + ["--to", str(workdir / "b.json")]) == 2
    assert capsys.readouterr().out.split() == ["feasible", "infeasible"]


def test_plan_and_eval(workdir):
    main(["terrain", "gen", "--scenario", str(workdir / "flat.json"), "--out", str(workdir / "map.json")])
    common = ["--map", str(workdir / "map.json"), "--model", str(workdir / "model.json"), "--n-candidates", "8",
              "--max-steps", "3"]
    assert main(["plan", *common, "--seed", "1", "--out", str(workdir / "plan.json"),
                 "--log", str(workdir / "log.jsonl")]) == 0
    plan = io.load_plan(workdir / "plan.json")
    assert len(plan.phases) >= 1
    assert len(io.load_episode_log(workdir / "log.jsonl").records) >= 1
    assert main(["eval", "esr", *common, "--episodes", "2", "--goal-distance", "3", "5", "--quiet",
                 "--out", str(workdir / "report.json")]) == 0
    report = json.loads((workdir / "report.json").read_text())
    assert report["n_episodes"] == 2 and 0.0 <= report["esr"] <= 1.0


def test_metrics_commands(workdir, capsys):
    rec = TrackingRecord([1, 0, 0, 0], [[0, 0, 0]] * 4, [[0.02, 0, 0]] + [[0, 0, 0]] * 3)
    io.save_tracking_log(TrackingLog([rec], [TouchdownEvent(0, (0.05, 0.0), (0.0, 0.0))]), workdir / "t.json")
    assert main(["metrics", "fter", "--log", str(workdir / "t.json")]) == 0
    assert main(["metrics", "fts", "--log", str(workdir / "t.json")]) == 0
    out = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert out[0]["fter"] == pytest.approx(0.02) and out[1] == {"fts": 1.0}


def test_bad_input_exit_code(workdir, capsys):
    (workdir / "bad.json").write_text("{}")
    assert main(["metrics", "fter", "--log", str(workdir / "bad.json")]) == 1
    assert "tracking_log" in capsys.readouterr().err


def test_serve_stdio_subprocess(workdir):
    proc = subprocess.run([sys.executable, "-m", "gaitlp", "serve", "--stdio", "--scenario", str(workdir / "flat.json")],
                          input='{"cmd":"spec"}\n{"cmd":"reset","seed":1}\n', capture_output=True, text=True,
                          timeout=120)
    replies = [json.loads(l) for l in proc.stdout.splitlines()]
    assert proc.returncode == 0 and [r["ok"] for r in replies] == [True, True]
