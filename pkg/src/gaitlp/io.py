"""Versioned JSON file formats for maps, plans, episode logs and tracking logs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .phase import PlannerAction, SupportPhase
from .terrain import (heightmap_from_dict, heightmap_to_dict, load_heightmap,
                      save_heightmap)

SCHEMA_VERSION = 1

__all__ = ["SchemaError", "require_fields", "read_json", "save_heightmap", "load_heightmap",
           "save_plan", "load_plan", "save_episode_log", "load_episode_log",
           "save_tracking_log", "load_tracking_log", "save_phase", "load_phase",
           "heightmap_to_dict", "heightmap_from_dict"]


class SchemaError(ValueError):
    """Malformed input file; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def require_fields(data, names, where: str) -> None:
    if not isinstance(data, dict):
        raise SchemaError(where, f"expected an object, got {type(data).__name__}")
    for name in names:
        if name not in data:
            raise SchemaError(f"{where}.{name}", "missing required field")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), f"invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _check_header(data, schema: str, where: str) -> None:
    require_fields(data, ("schema", "version"), where)
    if data["schema"] != schema:
        raise SchemaError(f"{where}.schema", f"expected {schema!r}, got {data['schema']!r}")
    if data["version"] != SCHEMA_VERSION:
        raise SchemaError(f"{where}.version", f"unsupported version {data['version']!r}")


def _dump(doc) -> str:
    return json.dumps(doc, separators=(",", ":")) + "\n"


# ---------------------------------------------------------------- phases

def save_phase(phase: SupportPhase, path) -> None:
    Path(path).write_text(_dump({"schema": "gaitlp.phase", "version": SCHEMA_VERSION, **phase.to_dict()}))


def load_phase(path) -> SupportPhase:
    data = read_json(path)
    _check_header(data, "gaitlp.phase", "phase")
    return SupportPhase.from_dict(data, "phase")


# ---------------------------------------------------------------- phase plans

def plan_to_dict(plan) -> dict:
    return {"schema": "gaitlp.plan", "version": SCHEMA_VERSION, "terrain_id": plan.terrain_id,
            "goal": list(map(float, plan.goal)), "seed": plan.seed,
            "rewards": [float(r) for r in plan.rewards],
            "phases": [p.to_dict() for p in plan.phases]}


def plan_from_dict(data):
    from .planner import PhasePlan

    _check_header(data, "gaitlp.plan", "plan")
    require_fields(data, ("terrain_id", "goal", "seed", "rewards", "phases"), "plan")
    phases = [SupportPhase.from_dict(p, f"plan.phases[{i}]") for i, p in enumerate(data["phases"])]
    return PhasePlan(phases=phases, terrain_id=data["terrain_id"], goal=tuple(data["goal"]),
                     seed=data["seed"], rewards=list(data["rewards"]))


def save_plan(plan, path) -> None:
    Path(path).write_text(_dump(plan_to_dict(plan)))


def load_plan(path):
    return plan_from_dict(read_json(path))


# ---------------------------------------------------------------- episode logs (JSON lines)

def episode_record_to_dict(rec) -> dict:
    return {"step": rec.step, "action": rec.action.to_dict(), "phase": rec.phase.to_dict(),
            "reward": rec.reward, "components": dict(rec.components),
            "termination_reason": rec.termination_reason, "success": rec.success}


def episode_log_lines(log) -> list[str]:
    header = {"schema": "gaitlp.episode_log", "version": SCHEMA_VERSION, "terrain_id": log.terrain_id,
              "seed": log.seed, "goal": list(map(float, log.goal)), "initial_phase": log.initial_phase.to_dict()}
    return [json.dumps(header, separators=(",", ":"))] + [
        json.dumps(episode_record_to_dict(r), separators=(",", ":")) for r in log.records]


def save_episode_log(log, path) -> None:
    Path(path).write_text("\n".join(episode_log_lines(log)) + "\n")


def load_episode_log(path):
    from .env import EpisodeLog, StepRecord

    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise SchemaError("episode_log", "empty file")
    try:
        docs = [json.loads(ln) for ln in lines]
    except json.JSONDecodeError as exc:
        raise SchemaError("episode_log", f"invalid JSON line ({exc.msg})") from None
    header = docs[0]
    _check_header(header, "gaitlp.episode_log", "episode_log")
    require_fields(header, ("terrain_id", "seed", "goal", "initial_phase"), "episode_log")
    records = []
    for i, d in enumerate(docs[1:]):
        where = f"episode_log.records[{i}]"
        require_fields(d, ("step", "action", "phase", "reward", "components", "termination_reason",
                           "success"), where)
        records.append(StepRecord(step=d["step"], action=PlannerAction.from_dict(d["action"]),
                                  phase=SupportPhase.from_dict(d["phase"], f"{where}.phase"),
                                  reward=d["reward"], components=d["components"],
                                  termination_reason=d["termination_reason"], success=d["success"]))
    return EpisodeLog(terrain_id=header["terrain_id"], seed=header["seed"], goal=tuple(header["goal"]),
                      initial_phase=SupportPhase.from_dict(header["initial_phase"], "episode_log.initial_phase"),
                      records=records)


# ---------------------------------------------------------------- tracking logs

def tracking_log_to_dict(log) -> dict:
    return {"schema": "gaitlp.tracking_log", "version": SCHEMA_VERSION,
            "records": [{"desired_contacts": r.desired_contacts.tolist(),
                         "desired_feet": r.desired_feet.tolist(),
                         "measured_feet": r.measured_feet.tolist()} for r in log.records],
            "touchdowns": [{"foot": e.foot, "touchdown_xy": list(map(float, e.touchdown_xy)),
                            "target_xy": list(map(float, e.target_xy))} for e in log.touchdowns]}


def tracking_log_from_dict(data):
    from .metrics import TouchdownEvent, TrackingLog, TrackingRecord

    _check_header(data, "gaitlp.tracking_log", "tracking_log")
    require_fields(data, ("records", "touchdowns"), "tracking_log")
    records = []
    for i, r in enumerate(data["records"]):
        where = f"tracking_log.records[{i}]"
        require_fields(r, ("desired_contacts", "desired_feet", "measured_feet"), where)
        records.append(TrackingRecord(np.asarray(r["desired_contacts"]), np.asarray(r["desired_feet"]),
                                      np.asarray(r["measured_feet"])))
    events = []
    for i, e in enumerate(data["touchdowns"]):
        require_fields(e, ("foot", "touchdown_xy", "target_xy"), f"tracking_log.touchdowns[{i}]")
        events.append(TouchdownEvent(e["foot"], tuple(e["touchdown_xy"]), tuple(e["target_xy"])))
    return TrackingLog(records=records, touchdowns=events)


def save_tracking_log(log, path) -> None:
    Path(path).write_text(_dump(tracking_log_to_dict(log)))


def load_tracking_log(path):
    return tracking_log_from_dict(read_json(path))


def save_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
