"""Receding-horizon random-shooting planner and the ESR harness.

Stands in for a trained policy.  Every decision samples a batch of actions
and rolls each out on the (immutable) state for a few steps.  It then
commits the first action of the best candidate: the one surviving longest,
ties broken by discounted return plus a progress bonus at the rollout leaf.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .env import NONE, EpisodeLog, GaitPlannerEnv, PlannerState, StepRecord
from .phase import ACTION_DIM, PlannerAction, SupportPhase
from .proposals import support_aware_actions, uniform_actions

TIMEOUT = "timeout"


@dataclass(frozen=True)
class ShootingConfig:
    """Planner knobs.

    ``prior_fraction`` of the candidates (and of the continuation actions)
    come from the support-aware prior, the rest are uniform over
    ``[-spread, spread]``.  ``progress_weight`` scales the leaf bonus
    ``d(start) - d(leaf)`` on base-to-goal distance; 0 scores by reward alone.
    """

    n_candidates: int = 64
    horizon: int = 2
    discount: float = 0.99
    seed: int = 0
    stance_bias: float = 0.1
    prior_fraction: float = 1.0
    spread: float = 1.0
    progress_weight: float = 30.0
    reach: float = 0.45
    margin: float = 0.03

    def __post_init__(self):
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if not 0.0 <= self.stance_bias <= 1.0:
            raise ValueError("stance_bias must lie in [0, 1]")
        if not 0.0 <= self.prior_fraction <= 1.0:
            raise ValueError("prior_fraction must lie in [0, 1]")
        if not 0.0 < self.spread <= 1.0:
            raise ValueError("spread must lie in (0, 1]")
        if self.progress_weight < 0.0:
            raise ValueError("progress_weight must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PhasePlan:
    phases: list
    terrain_id: str
    goal: tuple
    seed: int
    rewards: list = field(default_factory=list)

    def __len__(self):
        return len(self.phases)


@dataclass
class CandidateScores:
    actions: np.ndarray        # (n, ACTION_DIM) first actions
    returns: np.ndarray        # discounted reward plus leaf bonus
    depth: np.ndarray          # non-terminating rollout steps
    continuations: list        # per candidate, the later rollout actions

    def best(self) -> int:
        """Longest survival first, then highest score; ties go to the lowest index.

        Failing only costs the terminal reward, which a feasible step with a
        large negative progress term can undercut, so survival ranks first.
        """
        pool = self.depth == self.depth.max()
        return int(np.argmax(np.where(pool, self.returns, -np.inf)))


def sample_candidates(env: GaitPlannerEnv, state: PlannerState, config: ShootingConfig,
                      rng: np.random.Generator, n: int) -> np.ndarray:
    """Mixture of prior and uniform samples (prior rows first)."""
    n_prior = int(round(config.prior_fraction * n))
    parts = []
    if n_prior:
        parts.append(support_aware_actions(state, env.model, rng, n_prior, config.stance_bias,
                                           config.reach, config.margin))
    if n - n_prior:
        parts.append(uniform_actions(rng, n - n_prior, config.stance_bias, config.spread))
    return np.concatenate(parts) if parts else np.zeros((0, ACTION_DIM))


def _distance(state: PlannerState) -> float:
    return float(np.linalg.norm(state.goal_xy - state.phase.r_B[:2]))


def decision_rng(state: PlannerState, config: ShootingConfig) -> np.random.Generator:
    return np.random.default_rng([config.seed, state.seed, state.step_count])


def score_candidates(env: GaitPlannerEnv, state: PlannerState, config: ShootingConfig,
                     warm_start=()) -> CandidateScores:
    """Roll every candidate out for ``config.horizon`` steps.

    ``warm_start`` actions (vectors) replace the first sampled candidates;
    passing the previous decision's continuation keeps a known-feasible
    option in the pool.
    """
    rng = decision_rng(state, config)
    first = sample_candidates(env, state, config, rng, config.n_candidates)
    for i, vec in enumerate(list(warm_start)[:config.n_candidates]):
        first[i] = vec
    n = config.n_candidates
    returns = np.zeros(n)
    depth = np.zeros(n, dtype=int)
    conts = []
    d0 = _distance(state)
    for i in range(n):
        s, ret, disc, cont = state, 0.0, 1.0, []
        for h in range(config.horizon):
            if h == 0:
                vec = first[i]
            else:
                vec = sample_candidates(env, s, config, rng, 1)[0]
                cont.append(vec)
            s, out = env.step(s, PlannerAction.from_vector(vec), observe=False)
            ret += disc * out.reward
            if out.terminated:
                break
            depth[i] += 1
            if s.done:
                depth[i] = config.horizon
                break
            disc *= config.discount
        returns[i] = ret + config.progress_weight * (d0 - _distance(s))
        conts.append(cont)
    return CandidateScores(first, returns, depth, conts)


def propose_action(env: GaitPlannerEnv, state: PlannerState, config: ShootingConfig,
                   observation=None, warm_start=()) -> PlannerAction:
    """First action of the best candidate.

    ``observation`` is accepted for interface parity with learned policies;
    the shooting planner reads the state directly.
    """
    if state.done:
        raise ValueError("cannot plan from a finished episode")
    scores = score_candidates(env, state, config, warm_start)
    return PlannerAction.from_vector(scores.actions[scores.best()])


def plan_to_goal(env: GaitPlannerEnv, config: ShootingConfig, seed: int,
                 max_steps: int = 50, state: PlannerState | None = None) -> tuple[PhasePlan, EpisodeLog]:
    """Roll the planner out from a fresh reset until success, failure or the step cap."""
    if state is None:
        state, _ = env.reset(seed)
    plan = PhasePlan(phases=[state.phase], terrain_id=env.terrain_id,
                     goal=tuple(map(float, state.goal_xy)), seed=seed)
    log = EpisodeLog(terrain_id=env.terrain_id, seed=seed, goal=plan.goal, initial_phase=state.phase)
    carry = ()
    for _ in range(max_steps):
        scores = score_candidates(env, state, config, carry)
        best = scores.best()
        action = PlannerAction.from_vector(scores.actions[best])
        carry = scores.continuations[best][:1]
        step = state.step_count + 1
        state, out = env.step(state, action)
        log.records.append(StepRecord(step=step, action=action, phase=state.phase, reward=out.reward,
                                      components=out.components, termination_reason=out.termination_reason,
                                      success=out.success))
        if out.terminated:
            break
        plan.phases.append(state.phase)
        plan.rewards.append(out.reward)
        if state.done:
            break
    return plan, log


def revalidate_plan(env: GaitPlannerEnv, phases: list[SupportPhase]) -> list[str]:
    """Termination reason for every consecutive pair of a phase plan."""
    return [env.check_terminations(a, b) for a, b in zip(phases[:-1], phases[1:])]


def episode_seeds(master_seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.default_rng(master_seed).integers(0, 2**31 - 1, size=n)]


def episode_outcome(log: EpisodeLog) -> str:
    last = log.records[-1] if log.records else None
    if last is not None and last.success:
        return "success"
    if last is not None and last.termination_reason != NONE:
        return last.termination_reason
    return TIMEOUT


def evaluate_esr(env_factory: Callable[[int], GaitPlannerEnv] | GaitPlannerEnv, config: ShootingConfig,
                 n_episodes: int, master_seed: int = 0, max_steps: int = 50,
                 progress: Callable[[int, dict], None] | None = None) -> dict:
    """Episodic success rate over independent seeded episodes.

    ``env_factory`` maps an episode index to an environment (or is a single
    environment reused for every episode).
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    episodes = []
    for i, seed in enumerate(episode_seeds(master_seed, n_episodes)):
        env = env_factory if isinstance(env_factory, GaitPlannerEnv) else env_factory(i)
        plan, log = plan_to_goal(env, config, seed, max_steps=max_steps)
        summary = {"seed": seed, "outcome": episode_outcome(log), "steps": len(log.records),
                   "terrain_id": env.terrain_id}
        episodes.append(summary)
        if progress is not None:
            progress(i, summary)
    successes = sum(e["outcome"] == "success" for e in episodes)
    hist = Counter(e["outcome"] for e in episodes if e["outcome"] != "success")
    return {"esr": successes / n_episodes, "n_episodes": n_episodes, "successes": successes,
            "mean_steps": float(np.mean([e["steps"] for e in episodes])),
            "failures": dict(sorted(hist.items())), "master_seed": master_seed,
            "config": config.to_dict(), "episodes": episodes}
