"""Line-delimited JSON environment server for external trainers.

One request per line, one reply per line, in order.  Every session owns its
own episode state; the terrain and robot model are shared read-only.

Requests::

    {"cmd": "spec"}
    {"cmd": "reset", "seed": 7}
    {"cmd": "step", "action": {"a_R": 0.0, "a_B": [..2], "a_v": [..2],
                               "a_F": [..8], "a_c": [..3], "a_t": [..2]}}

Replies carry ``"ok": true`` plus the payload, or ``"ok": false`` and an
``error`` object ``{"type", "message"}``.  Errors never end the session.
"""

from __future__ import annotations

import json
import socketserver
import sys
import threading

from .env import TERMINATION_REASONS, EpisodeOverError, GaitPlannerEnv, ResetError
from .phase import ACTION_FIELDS, N_FEET, PlannerAction
from .terrain import LOCAL_MAP_PITCH, LOCAL_MAP_SIZE

PROTOCOL_VERSION = 1


class RequestError(ValueError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def spec_payload(env: GaitPlannerEnv) -> dict:
    return {
        "protocol_version": PROTOCOL_VERSION,
        "terrain_id": env.terrain_id,
        "observation": {"o_R": {"shape": []}, "o_v": {"shape": [2]}, "o_F": {"shape": [2 * N_FEET]},
                        "o_c": {"shape": [N_FEET]},
                        "o_M": {"shape": [LOCAL_MAP_SIZE, LOCAL_MAP_SIZE], "pitch": LOCAL_MAP_PITCH}},
        "action": {name: {"shape": [] if name == "a_R" else [n], "low": -1.0, "high": 1.0}
                   for name, n in ACTION_FIELDS},
        "termination_reasons": list(TERMINATION_REASONS),
        "max_episode_length": env.config.max_episode_length,
    }


class Session:
    """Protocol state machine for one client."""

    def __init__(self, env: GaitPlannerEnv):
        self.env = env
        self.state = None

    def handle_line(self, line: str) -> str:
        try:
            reply = {"ok": True, **self.dispatch(self._parse(line))}
        except RequestError as exc:
            reply = {"ok": False, "error": {"type": exc.kind, "message": str(exc)}}
        return json.dumps(reply, separators=(",", ":"))

    @staticmethod
    def _parse(line: str) -> dict:
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RequestError("parse_error", f"invalid JSON: {exc.msg}") from None
        if not isinstance(req, dict):
            raise RequestError("bad_request", "request must be a JSON object")
        return req

    def dispatch(self, req: dict) -> dict:
        cmd = req.get("cmd")
        if cmd == "spec":
            return {"spec": spec_payload(self.env)}
        if cmd == "reset":
            seed = req.get("seed")
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise RequestError("bad_request", "reset needs a non-negative integer 'seed'")
            try:
                self.state, obs = self.env.reset(seed)
            except ResetError as exc:
                raise RequestError("reset_failed", str(exc)) from None
            return {"observation": obs.to_dict(), "goal": self.state.goal_xy.tolist()}
        if cmd == "step":
            if self.state is None:
                raise RequestError("no_episode", "call reset before step")
            action = self._action(req.get("action"))
            try:
                self.state, out = self.env.step(self.state, action)
            except EpisodeOverError as exc:
                raise RequestError("episode_over", str(exc)) from None
            return {"observation": out.observation.to_dict(), "reward": out.reward,
                    "terminated": out.terminated, "reason": out.termination_reason,
                    "success": out.success, "truncated": out.truncated}
        raise RequestError("unknown_command", f"unknown cmd {cmd!r}; expected spec, reset or step")

    @staticmethod
    def _action(data) -> PlannerAction:
        if not isinstance(data, dict):
            raise RequestError("bad_action", "step needs an 'action' object")
        try:
            return PlannerAction.from_dict(data)
        except (ValueError, TypeError) as exc:
            raise RequestError("bad_action", str(exc)) from None


def serve_stream(env: GaitPlannerEnv, reader, writer) -> None:
    """Serve one session over text streams until EOF."""
    session = Session(env)
    for line in reader:
        if not line.strip():
            continue
        writer.write(session.handle_line(line) + "\n")
        writer.flush()


def serve_stdio(env: GaitPlannerEnv) -> None:
    serve_stream(env, sys.stdin, sys.stdout)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = Session(self.server.env)
        try:
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace")
                if not line.strip():
                    continue
                self.wfile.write((session.handle_line(line) + "\n").encode())
                self.wfile.flush()
        except (ConnectionError, OSError):
            pass


class EnvTCPServer(socketserver.ThreadingTCPServer):
    """Threaded TCP server; one independent session per connection."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, env: GaitPlannerEnv):
        super().__init__(address, _Handler)
        self.env = env


def serve_tcp(env: GaitPlannerEnv, host: str, port: int, ready: threading.Event | None = None) -> None:
    with EnvTCPServer((host, port), env) as server:
        print(f"serving on {server.server_address[0]}:{server.server_address[1]}", file=sys.stderr, flush=True)
        if ready is not None:
            ready.set()
        server.serve_forever()
