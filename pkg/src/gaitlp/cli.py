"""Command line entry point: ``gaitlp <command> ...`` (or ``python -m gaitlp``)."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import io
from .env import EnvConfig, GaitPlannerEnv
from .feasibility import transition_feasible
from .metrics import MetricInputError, compute_fter, compute_fts
from .phase import RobotModel
from .planner import ShootingConfig, evaluate_esr, plan_to_goal
from .terrain import TerrainScenario, export_pgm, generate, load_heightmap, save_heightmap

EXIT_INFEASIBLE = 2
EXIT_INPUT = 1


def _load_model(path) -> RobotModel:
    if path is None:
        return RobotModel()
    return RobotModel.from_dict(io.read_json(path))


def _load_scenario(path) -> TerrainScenario:
    return TerrainScenario.from_dict(io.read_json(path))


def _env_config(args) -> EnvConfig:
    kw = {}
    if getattr(args, "goal_distance", None):
        kw["goal_distance"] = tuple(args.goal_distance)
    if getattr(args, "max_steps", None):
        kw["max_episode_length"] = args.max_steps
    return EnvConfig(**kw)


def _make_env(args) -> GaitPlannerEnv:
    model, config = _load_model(args.model), _env_config(args)
    if args.scenario:
        scenario = _load_scenario(args.scenario)
        hm = load_heightmap(args.map) if args.map else None
        return GaitPlannerEnv.from_scenario(scenario, model, config, heightmap=hm)
    if not args.map:
        raise SystemExit("error: one of --map or --scenario is required")
    return GaitPlannerEnv(load_heightmap(args.map), model, config, terrain_id=Path(args.map).stem)


def _shooting_config(args) -> ShootingConfig:
    return ShootingConfig(n_candidates=args.n_candidates, horizon=args.horizon, seed=args.planner_seed)


# ------------------------------------------------------------------ commands

def cmd_terrain_gen(args) -> int:
    hm = generate(_load_scenario(args.scenario))
    save_heightmap(hm, args.out)
    if args.pgm:
        export_pgm(hm, args.pgm)
    print(f"wrote {args.out}: {hm.n_rows}x{hm.n_cols} cells at {hm.resolution} m")
    return 0


def cmd_model_init(args) -> int:
    io.save_json(RobotModel().to_dict(), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_feascheck(args) -> int:
    source, candidate = io.load_phase(getattr(args, "from")), io.load_phase(args.to)
    verdict = transition_feasible(source, candidate, _load_model(args.model), n_samples=args.samples)
    print("feasible" if verdict else "infeasible")
    return 0 if verdict else EXIT_INFEASIBLE


def cmd_plan(args) -> int:
    env = _make_env(args)
    plan, log = plan_to_goal(env, _shooting_config(args), args.seed, max_steps=env.config.max_episode_length)
    io.save_plan(plan, args.out)
    if args.log:
        io.save_episode_log(log, args.log)
    last = log.records[-1] if log.records else None
    status = "success" if log.success else (last.termination_reason if last else "none")
    print(f"{len(log.records)} phases, outcome {status}, plan written to {args.out}")
    return 0


def cmd_eval_esr(args) -> int:
    env = _make_env(args)
    start = time.perf_counter()

    def progress(i, ep):
        if not args.quiet:
            print(f"episode {i + 1}/{args.episodes}: {ep['outcome']} after {ep['steps']} phases "
                  f"({time.perf_counter() - start:.0f} s)", file=sys.stderr, flush=True)

    report = evaluate_esr(env, _shooting_config(args), args.episodes, master_seed=args.seed,
                          max_steps=env.config.max_episode_length, progress=progress)
    report["wall_time_s"] = time.perf_counter() - start
    if args.out:
        io.save_json(report, args.out)
    print(f"ESR {report['esr']:.3f} ({report['successes']}/{report['n_episodes']}), "
          f"mean {report['mean_steps']:.1f} phases, failures {report['failures']}")
    return 0


def cmd_metrics(args) -> int:
    log = io.load_tracking_log(args.log)
    try:
        value = compute_fter(log) if args.metric == "fter" else compute_fts(log)
    except MetricInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps({args.metric: value}))
    return 0


def cmd_serve(args) -> int:
    from .server import serve_stdio, serve_tcp

    env = _make_env(args)
    if args.stdio:
        serve_stdio(env)
    else:
        host, _, port = args.tcp.rpartition(":")
        serve_tcp(env, host or "127.0.0.1", int(port))
    return 0


# ------------------------------------------------------------------ parser

def _add_env_args(p, goal=True):
    p.add_argument("--map", help="heightmap JSON")
    p.add_argument("--scenario", help="scenario JSON (regenerates the map unless --map is given)")
    p.add_argument("--model", help="robot model JSON (defaults to the built-in model)")
    if goal:
        p.add_argument("--goal-distance", nargs=2, type=float, metavar=("LO", "HI"),
                       help="draw goals at this distance from the start instead of from the goal region")
        p.add_argument("--max-steps", type=int, default=None, help="phases per episode (default 50)")


def _add_planner_args(p):
    p.add_argument("--n-candidates", type=int, default=ShootingConfig.n_candidates)
    p.add_argument("--horizon", type=int, default=ShootingConfig.horizon)
    p.add_argument("--planner-seed", type=int, default=ShootingConfig.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitlp", description="Feasibility-screened support-phase planning.")
    sub = parser.add_subparsers(dest="command", required=True)

    terrain = sub.add_parser("terrain", help="terrain tools").add_subparsers(dest="action", required=True)
    p = terrain.add_parser("gen", help="generate a heightmap from a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm", help="also export a 16-bit PGM image")
    p.set_defaults(func=cmd_terrain_gen)

    model = sub.add_parser("model", help="robot model tools").add_subparsers(dest="action", required=True)
    p = model.add_parser("init", help="write the default robot model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_model_init)

    p = sub.add_parser("feascheck", help="transition feasibility between two phase files")
    p.add_argument("--from", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--model")
    p.add_argument("--samples", type=int, default=8)
    p.set_defaults(func=cmd_feascheck)

    p = sub.add_parser("plan", help="plan one episode to the goal")
    _add_env_args(p)
    _add_planner_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="episode log (JSON lines)")
    p.set_defaults(func=cmd_plan)

    ev = sub.add_parser("eval", help="evaluation").add_subparsers(dest="action", required=True)
    p = ev.add_parser("esr", help="episodic success rate of the planner")
    _add_env_args(p)
    _add_planner_args(p)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_eval_esr)

    p = sub.add_parser("metrics", help="foothold tracking metrics")
    p.add_argument("metric", choices=("fter", "fts"))
    p.add_argument("--log", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="line-delimited JSON environment server")
    _add_env_args(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--stdio", action="store_true")
    mode.add_argument("--tcp", metavar="HOST:PORT")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
