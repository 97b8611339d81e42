"""Screening single support-phase transitions with the feasibility LP.

A robot stands on flat ground.  We try a handful of candidate next phases
(stand still, shift the base, lift a foot, leap 10 m) and ask the LP whether
a dynamically consistent centroidal motion connects them.  The last part
shows the static-equilibrium limit: pinning the CoM and sliding it toward
and past the edge of the support polygon.
"""

import time

import numpy as np

from gaitlp import PlannerAction, RobotModel, apply_action, flat_world, generate, transition_feasible
from gaitlp.phase import N_FEET, SupportPhase, rot_z

model = RobotModel()
terrain = generate(flat_world(side=20.0))

feet = np.column_stack([10.0 + model.nominal, np.zeros(N_FEET)])
stance = SupportPhase(R_B=rot_z(0.0), r_B=[10.0, 10.0, model.h_com], v_B=np.zeros(3), r_F=feet,
                      c_F=np.ones(N_FEET), t_E=1.0, t_S=1.0)

candidates = {
    "stand still": PlannerAction(),
    "shift base 9 cm forward": PlannerAction(a_B=[0.3, 0.0]),
    "turn 22.5 deg": PlannerAction(a_R=1.0),
    "lift right hind, reach forward": PlannerAction(a_B=[0.1, 0.05], a_F=[0, 0, 0, 0, 0, 0, 0.3, 0.1],
                                                    a_c=[-1, 1, 1]),
    "lift one fore foot, base shifted back": PlannerAction(a_B=[-0.6, -0.6], a_c=[1, 1, -1]),
}
print("candidate transitions from a four-foot stance")
for name, action in candidates.items():
    nxt = apply_action(stance, action, terrain, model)
    t0 = time.perf_counter()
    verdict = transition_feasible(stance, nxt, model)
    print(f"  {name:34s} -> {'feasible' if verdict else 'infeasible'} ({(time.perf_counter() - t0) * 1e3:.1f} ms)")

leap = stance.replace(r_B=stance.r_B + [10.0, 0.0, 0.0])
print(f"  {'base teleported 10 m':34s} -> {'feasible' if transition_feasible(stance, leap, model) else 'infeasible'}")

# Static equilibrium: a pinned CoM must lie over the support polygon.
wide = RobotModel(friction_coeff=1.0, box_lower=((-3, -3, -3),) * 4, box_upper=((3, 3, 3),) * 4)
print("\nCoM slid forward with the trajectory pinned (front feet at +0.33 m)")
for dx in (0.0, 0.2, 0.3, 0.32, 0.34, 0.4):
    ph = stance.replace(r_B=stance.r_B + [dx, 0.0, 0.0])
    ok = transition_feasible(ph, ph, wide, pin_midpoint=ph.r_B)
    print(f"  dx = {dx:+.2f} m -> {'balanced' if ok else 'falls'}")
