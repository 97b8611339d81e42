"""Planning a walk to a goal and replaying the committed phases.

The random-shooting planner stands in for a learned policy: each decision it
samples candidate actions, rolls them out through the environment (whose
transition checks include the feasibility LP) and commits the best.  The
result is a sequence of support phases that we then re-validate pair by pair.
"""

import time
from collections import Counter

import numpy as np

from gaitlp import EnvConfig, GaitPlannerEnv, ShootingConfig, flat_world, plan_to_goal
from gaitlp.phase import FEET
from gaitlp.planner import revalidate_plan

env = GaitPlannerEnv.from_scenario(flat_world(side=20.0), config=EnvConfig(goal_distance=(3.0, 4.0)))
state, obs = env.reset(seed=5)
print(f"start base {state.phase.r_B[:2].round(2)}, goal {state.goal_xy.round(2)}, "
      f"distance {np.linalg.norm(state.goal_xy - state.phase.r_B[:2]):.2f} m")

t0 = time.perf_counter()
plan, log = plan_to_goal(env, ShootingConfig(), seed=5, max_steps=50)
print(f"planned {len(log.records)} phases in {time.perf_counter() - t0:.1f} s, success: {log.success}")

swings = Counter()
for rec in log.records:
    lifted = [FEET[k] for k in range(4) if rec.phase.c_F[k] == 0]
    swings[lifted[0] if lifted else "stance"] += 1
print("phase types:", dict(swings))
print("remaining distance:", round(float(np.linalg.norm(state.goal_xy - plan.phases[-1].r_B[:2])), 2), "m")

reasons = revalidate_plan(env, plan.phases)
print("re-validation of consecutive phases:", dict(Counter(reasons)))
