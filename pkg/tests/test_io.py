import json

import numpy as np
import pytest

from conftest import make_stance
from gaitlp import io
from gaitlp.env import GaitPlannerEnv
from gaitlp.metrics import TouchdownEvent, TrackingLog, TrackingRecord
from gaitlp.planner import ShootingConfig, plan_to_goal, revalidate_plan
from gaitlp.terrain import flat_world, generate, random_stairs


@pytest.fixture(scope="module")
def episode():
    env = GaitPlannerEnv.from_scenario(flat_world(side=12.0))
    plan, log = plan_to_goal(env, ShootingConfig(n_candidates=16), seed=3, max_steps=4)
    return env, plan, log


def test_heightmap_round_trip(tmp_path):
    hm = generate(random_stairs(side=4.0, seed=2))
    io.save_heightmap(hm, tmp_path / "a.json")
    back = io.load_heightmap(tmp_path / "a.json")
    assert back == hm
    io.save_heightmap(back, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_plan_round_trip_and_revalidation(tmp_path, episode):
    env, plan, _ = episode
    io.save_plan(plan, tmp_path / "plan.json")
    back = io.load_plan(tmp_path / "plan.json")
    assert back.phases == plan.phases and back.rewards == plan.rewards and back.goal == plan.goal
    io.save_plan(back, tmp_path / "again.json")
    assert (tmp_path / "plan.json").read_bytes() == (tmp_path / "again.json").read_bytes()
    assert all(r == "none" for r in revalidate_plan(env, back.phases))


def test_episode_log_round_trip(tmp_path, episode):
    _, _, log = episode
    io.save_episode_log(log, tmp_path / "log.jsonl")
    back = io.load_episode_log(tmp_path / "log.jsonl")
    assert len(back.records) == len(log.records)
    for a, b in zip(back.records, log.records):
        assert a.action == b.action and a.phase == b.phase and a.reward == b.reward
        assert a.components == b.components and a.termination_reason == b.termination_reason
    io.save_episode_log(back, tmp_path / "again.jsonl")
    assert (tmp_path / "log.jsonl").read_bytes() == (tmp_path / "again.jsonl").read_bytes()
    first = json.loads((tmp_path / "log.jsonl").read_text().splitlines()[1])
    assert set(first["components"]) == {"r_p", "r_h", "r_k", "r_c"}


def test_tracking_log_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    log = TrackingLog([TrackingRecord(rng.integers(0, 2, 4), rng.normal(size=(4, 3)), rng.normal(size=(4, 3)))
                       for _ in range(3)],
                      [TouchdownEvent(1, (0.1, 0.2), (0.11, 0.19))])
    io.save_tracking_log(log, tmp_path / "t.json")
    back = io.load_tracking_log(tmp_path / "t.json")
    assert all(np.array_equal(a.measured_feet, b.measured_feet) for a, b in zip(back.records, log.records))
    assert back.touchdowns == log.touchdowns
    io.save_tracking_log(back, tmp_path / "u.json")
    assert (tmp_path / "t.json").read_bytes() == (tmp_path / "u.json").read_bytes()


def test_phase_round_trip(tmp_path):
    ph = make_stance((1.0, 2.0), 0.7, contacts=(1, 1, 0, 1))
    io.save_phase(ph, tmp_path / "p.json")
    assert io.load_phase(tmp_path / "p.json") == ph


def test_missing_field_is_named(tmp_path):
    hm = generate(flat_world(side=2.0))
    doc = io.heightmap_to_dict(hm)
    del doc["resolution"]
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(io.SchemaError, match="heightmap.resolution"):
        io.load_heightmap(tmp_path / "bad.json")
    ph = make_stance()
    doc = {"schema": "gaitlp.phase", "version": 1, **ph.to_dict()}
    del doc["c_F"]
    (tmp_path / "p.json").write_text(json.dumps(doc))
    with pytest.raises(io.SchemaError, match="phase.c_F"):
        io.load_phase(tmp_path / "p.json")
    (tmp_path / "x.json").write_text("{nope")
    with pytest.raises(io.SchemaError):
        io.load_plan(tmp_path / "x.json")


def test_wrong_schema_or_version(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps({"schema": "gaitlp.plan", "version": 99}))
    with pytest.raises(io.SchemaError, match="version"):
        io.load_plan(tmp_path / "a.json")
    (tmp_path / "b.json").write_text(json.dumps({"schema": "gaitlp.tracking_log", "version": 1}))
    with pytest.raises(io.SchemaError, match="plan.schema"):
        io.load_plan(tmp_path / "b.json")
