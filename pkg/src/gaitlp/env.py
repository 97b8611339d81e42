"""The gait-planner MDP.

Transitions are not simulated.  A candidate phase is built from the action
and accepted only if the foothold, base-collision and transition-feasibility
checks all pass; otherwise the episode ends in an absorbing failure state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .feasibility import DEFAULT_SAMPLES, SolverError, transition_feasible
from .phase import (N_FEET, PlannerAction, PlannerObservation, RobotModel, SupportPhase,
                    apply_action, build_observation, foot_offsets, goal_bearing, rot_z)
from .terrain import (LOCAL_MAP_PITCH, LOCAL_MAP_SIZE, HeightMap, OutOfBoundsError, TerrainScenario,
                      footprint_regions, generate, scenario_regions)

NONE = "none"
FOOTHOLDS = "footholds"
BASE_COLLISION = "base_collision"
INFEASIBLE = "infeasible"
OUT_OF_BOUNDS = "out_of_bounds"
SOLVER_FAILURE = "solver_failure"
TERMINATION_REASONS = (NONE, FOOTHOLDS, BASE_COLLISION, INFEASIBLE, OUT_OF_BOUNDS, SOLVER_FAILURE)


class EpisodeOverError(RuntimeError):
    """``step`` was called on a finished episode."""


class ResetError(RuntimeError):
    """No valid start state was found within the rejection budget."""


@dataclass(frozen=True)
class EnvConfig:
    max_episode_length: int = 50
    goal_radius: float = 0.5
    terminal_reward: float = -1.0
    w_p: float = 25.0
    w_k: float = 80.0
    w_c: float = 0.01
    probe_radius: float = 0.05
    probe_count: int = 8
    probe_threshold: float = 0.01
    base_footprint: tuple = (0.6, 0.3)
    base_probe_grid: tuple = (7, 4)
    base_clearance: float = 0.05
    n_samples: int = DEFAULT_SAMPLES
    lp_tolerance: float = 1e-6
    rejection_budget: int = 1000
    yaw_spread: float = math.pi / 4
    foot_init_box: float = 0.1
    goal_distance: tuple | None = None


@dataclass(frozen=True, eq=False)
class PlannerState:
    phase: SupportPhase
    goal_xy: np.ndarray
    step_count: int = 0
    stance_counts: tuple = (0, 0, 0, 0)
    seed: int = 0
    done: bool = False

    def __eq__(self, other):
        if not isinstance(other, PlannerState):
            return NotImplemented
        return (self.phase == other.phase and np.array_equal(self.goal_xy, other.goal_xy)
                and self.step_count == other.step_count and self.stance_counts == other.stance_counts
                and self.seed == other.seed and self.done == other.done)


@dataclass(frozen=True)
class StepOutcome:
    observation: PlannerObservation
    reward: float
    terminated: bool
    termination_reason: str
    success: bool
    truncated: bool = False
    components: dict = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return self.terminated or self.success or self.truncated


@dataclass
class StepRecord:
    step: int
    action: PlannerAction
    phase: SupportPhase
    reward: float
    components: dict
    termination_reason: str
    success: bool


@dataclass
class EpisodeLog:
    terrain_id: str
    seed: int
    goal: tuple
    initial_phase: SupportPhase
    records: list = field(default_factory=list)

    @property
    def success(self) -> bool:
        return bool(self.records) and self.records[-1].success


def update_stance_counts(counts, contacts) -> tuple:
    """Increment the counter of every foot still closed, reset lifted ones."""
    return tuple(int(n) + 1 if c else 0 for n, c in zip(counts, contacts))


def _probe_ring(radius: float, count: int) -> np.ndarray:
    ang = 2 * np.pi * np.arange(count) / count
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


class GaitPlannerEnv:
    """Gait-planner MDP bound to one terrain and robot model.

    ``reset``/``step`` are pure in the state they are given, so states can be
    cloned freely (the planner rolls candidates out on copies).
    """

    def __init__(self, heightmap: HeightMap, model: RobotModel | None = None,
                 config: EnvConfig | None = None, spawn_region=None, goal_region=None,
                 terrain_id: str = "terrain"):
        self.heightmap = heightmap
        self.model = model or RobotModel()
        self.config = config or EnvConfig()
        if spawn_region is None or goal_region is None:
            d_spawn, d_goal = footprint_regions(heightmap)
            spawn_region = d_spawn if spawn_region is None else spawn_region
            goal_region = d_goal if goal_region is None else goal_region
        self.spawn_region = tuple(spawn_region)
        self.goal_region = tuple(goal_region)
        self.terrain_id = terrain_id
        self._ring = _probe_ring(self.config.probe_radius, self.config.probe_count)
        L, W = self.config.base_footprint
        nx, ny = self.config.base_probe_grid
        gx, gy = np.meshgrid(np.linspace(-L / 2, L / 2, nx), np.linspace(-W / 2, W / 2, ny), indexing="ij")
        self._base_grid = np.column_stack([gx.ravel(), gy.ravel()])
        half = 0.5 * (LOCAL_MAP_SIZE - 1) * LOCAL_MAP_PITCH
        self._window_corners = np.array([[-half, -half], [-half, half], [half, -half], [half, half]])

    @classmethod
    def from_scenario(cls, scenario: TerrainScenario, model: RobotModel | None = None,
                      config: EnvConfig | None = None, heightmap: HeightMap | None = None) -> "GaitPlannerEnv":
        hm = heightmap if heightmap is not None else generate(scenario)
        spawn, goal = scenario_regions(scenario, hm)
        return cls(hm, model, config, spawn, goal, terrain_id=scenario.name)

    # ------------------------------------------------------------ observation

    def observe(self, state: PlannerState) -> PlannerObservation:
        return build_observation(state.phase, state.goal_xy, self.heightmap, self.model)

    # ------------------------------------------------------------ terminations

    def check_footholds(self, phase: SupportPhase) -> str:
        feet = phase.r_F[phase.contacts]
        probes = (feet[:, None, :2] + self._ring[None]).reshape(-1, 2)
        try:
            z = self.heightmap.elevations_at(probes).reshape(len(feet), -1)
        except OutOfBoundsError:
            return OUT_OF_BOUNDS
        if np.any(np.abs(z - feet[:, 2:3]) > self.config.probe_threshold):
            return FOOTHOLDS
        return NONE

    def check_base(self, phase: SupportPhase) -> str:
        c, s = math.cos(phase.yaw), math.sin(phase.yaw)
        R = np.array([[c, -s], [s, c]])
        base_xy = phase.r_B[:2]
        try:
            z = self.heightmap.elevations_at(base_xy + self._base_grid @ R.T)
        except OutOfBoundsError:
            return OUT_OF_BOUNDS
        if np.any(z > phase.r_B[2] - self.config.base_clearance):
            return BASE_COLLISION
        if not np.all(self.heightmap.contains(base_xy + self._window_corners @ R.T)):
            return OUT_OF_BOUNDS
        return NONE

    def check_feasibility(self, source: SupportPhase, candidate: SupportPhase) -> str:
        try:
            ok = transition_feasible(source, candidate, self.model, self.config.n_samples,
                                     self.config.lp_tolerance)
        except SolverError:
            return SOLVER_FAILURE
        return NONE if ok else INFEASIBLE

    def check_terminations(self, source: SupportPhase, candidate: SupportPhase) -> str:
        """Foothold, base and feasibility checks, in that order; first failure wins."""
        for reason in (self.check_footholds(candidate), self.check_base(candidate)):
            if reason != NONE:
                return reason
        return self.check_feasibility(source, candidate)

    # ------------------------------------------------------------ reward

    def reward_terms(self, state: PlannerState, candidate: SupportPhase) -> dict:
        cfg = self.config
        goal = state.goal_xy
        src = state.phase

        def support_center(phase):
            closed = phase.contacts
            return phase.r_F[closed, :2].mean(axis=0)

        r_p = cfg.w_p * (np.linalg.norm(goal - support_center(src))
                         - np.linalg.norm(goal - support_center(candidate)))
        r_h = 1.0 - abs(goal_bearing(candidate, goal)) / math.pi
        offsets = foot_offsets(candidate, self.model)
        r_k = max(0.0, 1.0 - cfg.w_k * float(np.sum(np.abs(offsets) ** 3)))
        counts = update_stance_counts(state.stance_counts, candidate.c_F)
        r_c = cfg.w_c * sum(counts)
        return {"r_p": float(r_p), "r_h": float(r_h), "r_k": float(r_k), "r_c": float(r_c)}

    def compute_reward(self, state: PlannerState, candidate: SupportPhase, terminated: bool) -> float:
        if terminated:
            return self.config.terminal_reward
        t = self.reward_terms(state, candidate)
        return t["r_p"] * t["r_h"] ** 2 * t["r_k"] - t["r_c"]

    # ------------------------------------------------------------ dynamics

    def reset(self, seed: int) -> tuple[PlannerState, PlannerObservation]:
        """Rejection-sample a valid start pose and goal."""
        cfg = self.config
        rng = np.random.default_rng(seed)
        sx0, sx1, sy0, sy1 = self.spawn_region
        gx0, gx1, gy0, gy1 = self.goal_region
        half_box = 0.5 * cfg.foot_init_box
        for _ in range(cfg.rejection_budget):
            base_xy = np.array([rng.uniform(sx0, sx1), rng.uniform(sy0, sy1)])
            if cfg.goal_distance is not None:
                dist = rng.uniform(*cfg.goal_distance)
                ang = rng.uniform(-math.pi, math.pi)
                goal = base_xy + dist * np.array([math.cos(ang), math.sin(ang)])
            else:
                goal = np.array([rng.uniform(gx0, gx1), rng.uniform(gy0, gy1)])
            yaw = math.atan2(goal[1] - base_xy[1], goal[0] - base_xy[0]) + rng.uniform(-cfg.yaw_spread,
                                                                                   cfg.yaw_spread)
            jitter = rng.uniform(-half_box, half_box, size=(N_FEET, 2))
            if not (gx0 <= goal[0] <= gx1 and gy0 <= goal[1] <= gy1):
                continue
            if np.linalg.norm(goal - base_xy) <= cfg.goal_radius:
                continue
            R = rot_z(yaw)
            feet_xy = base_xy + (self.model.nominal + jitter) @ R[:2, :2].T
            if not np.all(self.heightmap.contains(feet_xy)):
                continue
            feet_z = self.heightmap.elevations_at(feet_xy)
            phase = SupportPhase(R_B=R, r_B=[base_xy[0], base_xy[1], feet_z.min() + self.model.h_com],
                                 v_B=np.zeros(3), r_F=np.column_stack([feet_xy, feet_z]),
                                 c_F=np.ones(N_FEET, dtype=int), t_E=1.0, t_S=1.0)
            if self.check_terminations(phase, phase) != NONE:
                continue
            state = PlannerState(phase=phase, goal_xy=goal, seed=seed)
            return state, self.observe(state)
        raise ResetError(f"no valid start found for {self.terrain_id} (seed {seed}) "
                         f"after {cfg.rejection_budget} draws")

    def step(self, state: PlannerState, action: PlannerAction,
             observe: bool = True) -> tuple[PlannerState, StepOutcome]:
        """Advance one phase.  ``observe=False`` skips the observation (rollouts)."""
        if state.done:
            raise EpisodeOverError("cannot step a finished episode; call reset()")
        cfg = self.config
        try:
            candidate = apply_action(state.phase, action, self.heightmap, self.model)
            reason = self.check_terminations(state.phase, candidate)
        except OutOfBoundsError:
            reason = OUT_OF_BOUNDS
        if reason != NONE:
            frozen = replace(state, done=True)
            obs = self.observe(frozen) if observe else None
            return frozen, StepOutcome(obs, cfg.terminal_reward, True, reason, False,
                                       components={})
        terms = self.reward_terms(state, candidate)
        reward = terms["r_p"] * terms["r_h"] ** 2 * terms["r_k"] - terms["r_c"]
        count = state.step_count + 1
        success = bool(np.linalg.norm(candidate.r_B[:2] - state.goal_xy) <= cfg.goal_radius)
        truncated = not success and count >= cfg.max_episode_length
        new_state = PlannerState(phase=candidate, goal_xy=state.goal_xy, step_count=count,
                                 stance_counts=update_stance_counts(state.stance_counts, candidate.c_F),
                                 seed=state.seed, done=success or truncated)
        obs = self.observe(new_state) if observe else None
        return new_state, StepOutcome(obs, float(reward), False, NONE, success,
                                      truncated, terms)
