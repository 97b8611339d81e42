"""Action samplers for the shooting planner.

``uniform_actions`` draws from the whole clipped action box.
``support_aware_actions`` is a cheap geometric prior.  It turns toward the
goal, picks which foot to lift (favoring feet that have stood longest and
never the diagonal partner of a foot already in the air), lands the
airborne foot ahead of its nominal position, and puts the base inside both
support polygons and every stance foot's kinematic box.  The environment
still screens every sample; the prior only raises the hit rate.
"""

from __future__ import annotations

import numpy as np
import shapely
from shapely.geometry import MultiPoint

from .env import PlannerState
from .phase import (ACTION_DIM, FOOT_STEP, N_FEET, TRANSLATION_STEP, YAW_STEP, RobotModel, _planar,
                    goal_bearing)

# action vector layout
A_R, A_B, A_V, A_F, A_C, A_T = 0, slice(1, 3), slice(3, 5), slice(5, 13), slice(13, 16), slice(16, 18)

DIAGONAL = np.array([3, 2, 1, 0])
TURN_SCALES = (1.0, 0.5, 0.5, 0.0)


def code_signs(rng: np.random.Generator, n: int, stance_bias: float, lift=None) -> np.ndarray:
    """Sign patterns for ``a_c`` with magnitudes in [0.1, 1]."""
    stance = rng.random(n) < stance_bias
    code = np.where(stance, rng.integers(4, 8, size=n), rng.integers(0, 4, size=n) if lift is None else lift)
    bits = (code[:, None] >> np.array([2, 1, 0])) & 1
    return np.where(bits == 1, 1.0, -1.0) * rng.uniform(0.1, 1.0, size=(n, 3))


def uniform_actions(rng: np.random.Generator, n: int, stance_bias: float, spread: float = 1.0) -> np.ndarray:
    """``n`` actions uniform in ``[-spread, spread]``; the contact code is drawn separately.

    A full-stance code is chosen with probability ``stance_bias``, otherwise
    one of the four single-swing codes.
    """
    A = rng.uniform(-spread, spread, size=(n, ACTION_DIM))
    A[:, A_C] = code_signs(rng, n, stance_bias)
    return A


def reach_region(feet_xy: np.ndarray, idx, yaw: float, model: RobotModel):
    """Base positions that keep each foot in ``idx`` inside its planar kinematic box."""
    lo, hi = model.kinematic_box
    idx = np.asarray(idx)
    # base = foot - P @ rel for rel in the box; corners in counter-clockwise order
    rel = np.stack([lo[idx, :2], np.column_stack([hi[idx, 0], lo[idx, 1]]), hi[idx, :2],
                    np.column_stack([lo[idx, 0], hi[idx, 1]])], axis=1)
    corners = feet_xy[idx, None, :] - rel @ _planar(yaw).T
    return shapely.intersection_all(shapely.polygons(corners))


def _sample_in(region, rng: np.random.Generator):
    if region.is_empty or region.area <= 0.0 or region.geom_type != "Polygon":
        return None
    verts = np.asarray(region.exterior.coords)[:-1]
    return rng.dirichlet(np.ones(len(verts))) @ verts


def support_aware_actions(state: PlannerState, model: RobotModel, rng: np.random.Generator, n: int,
                          stance_bias: float, reach: float = 0.45, margin: float = 0.03,
                          lift_power: float = 2.0) -> np.ndarray:
    ph = state.phase
    bearing = goal_bearing(ph, state.goal_xy)
    lifted = np.flatnonzero(ph.c_F == 0)
    src = np.flatnonzero(ph.c_F)
    src_hull = MultiPoint(ph.r_F[src, :2]).convex_hull
    options = np.array([k for k in range(N_FEET)
                        if k not in lifted and not (len(lifted) and k == DIAGONAL[lifted[0]])])
    weights = (np.asarray(state.stance_counts, dtype=np.float64)[options] + 1.0) ** lift_power
    weights /= weights.sum()

    A = np.zeros((n, ACTION_DIM))
    A[:, A_R] = np.clip(bearing / YAW_STEP + rng.normal(0.0, 0.3, size=n), -1.0, 1.0)
    lift = rng.choice(options, size=n, p=weights)
    A[:, A_C] = code_signs(rng, n, stance_bias, lift)
    A[:, A_V] = rng.uniform(-0.1, 0.1, size=(n, 2))
    A[:, A_T.stop - 1] = rng.uniform(-0.3, 0.3, size=n)
    stance = A[:, A_C.start] >= 0.0

    for i in range(n):
        contacts = np.ones(N_FEET, dtype=int)
        if not stance[i]:
            contacts[lift[i]] = 0
        closed = np.flatnonzero(contacts)
        landing = [k for k in lifted if contacts[k]]
        steps = np.column_stack([rng.uniform(0.0, reach, len(landing)), rng.uniform(-0.05, 0.05, len(landing))])
        # planted feet limit how far the base can turn: halve the turn until a base pose exists
        for scale in TURN_SCALES:
            A[i, A_R] *= scale
            yaw = ph.yaw + YAW_STEP * A[i, A_R]
            P = _planar(yaw)
            feet = ph.r_F[:, :2].copy()
            for k, step in zip(landing, steps):
                feet[k] = ph.r_B[:2] + P @ (model.nominal[k] + step)
            region = src_hull.intersection(MultiPoint(feet[closed]).convex_hull).buffer(-margin)
            base = _sample_in(region.intersection(reach_region(feet, closed, yaw, model)), rng)
            if base is not None:
                break
        if base is None:
            base = feet[closed].mean(axis=0)
        a_B = np.clip(P.T @ (base - ph.r_B[:2]) / TRANSLATION_STEP, -1.0, 1.0)
        base = ph.r_B[:2] + P @ (TRANSLATION_STEP * a_B)
        a_F = np.zeros((N_FEET, 2))
        for k in landing:
            a_F[k] = (P.T @ (feet[k] - base) - model.nominal[k]) / FOOT_STEP
        if not stance[i]:
            a_F[lift[i]] = [rng.uniform(0.0, 0.3), 0.0]
        A[i, A_B] = a_B
        A[i, A_F] = np.clip(a_F.ravel(), -1.0, 1.0)
    return A
