"""Support phases, planner actions/observations and the transforms between them.

Feet are always ordered LF, RF, LH, RH.  Planar transforms use the
yaw-projected base frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.spatial.transform import Rotation

from .terrain import HeightMap, local_heightmap

FEET = ("LF", "RF", "LH", "RH")
N_FEET = 4

YAW_STEP = math.pi / 8
TRANSLATION_STEP = 0.3
FOOT_STEP = 0.3
TIMING_SCALE = 0.9


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def yaw_of(R: np.ndarray) -> float:
    return math.atan2(R[1, 0], R[0, 0])


def _planar(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RobotModel:
    """Coarse centroidal model of the quadruped (ANYmal-scale defaults).

    ``box_lower``/``box_upper`` bound each foot's position relative to the
    base, expressed in the base frame, shape ``(4, 3)``.
    """

    mass: float = 30.0
    gravity: tuple = (0.0, 0.0, -9.81)
    h_com: float = 0.45
    nominal_footholds: tuple = ((0.33, 0.22), (0.33, -0.22), (-0.33, 0.22), (-0.33, -0.22))
    box_lower: tuple | None = None
    box_upper: tuple | None = None
    friction_coeff: float = 0.7
    max_normal_force: float = 1000.0
    max_step: float = 0.3

    def __post_init__(self):
        nominal = np.asarray(self.nominal_footholds, dtype=np.float64)
        if nominal.shape != (N_FEET, 2):
            raise ValueError("nominal_footholds must hold four (x, y) offsets")
        if self.box_lower is None or self.box_upper is None:
            lo, hi = self.default_box(nominal)
            object.__setattr__(self, "box_lower", tuple(map(tuple, lo)))
            object.__setattr__(self, "box_upper", tuple(map(tuple, hi)))
        lo, hi = self.kinematic_box
        if lo.shape != (N_FEET, 3) or hi.shape != (N_FEET, 3) or not np.all(hi > lo):
            raise ValueError("kinematic box extents must be positive, shape (4, 3)")
        if not (self.mass > 0 and self.h_com > 0 and self.friction_coeff > 0
                and self.max_normal_force > 0 and self.max_step > 0):
            raise ValueError("mass, h_com, friction, force cap and max_step must be positive")

    @staticmethod
    def default_box(nominal, half_x=0.28, half_y=0.18, z_range=(-0.60, -0.30)):
        nominal = np.asarray(nominal, dtype=np.float64)
        lo = np.column_stack([nominal[:, 0] - half_x, nominal[:, 1] - half_y, np.full(N_FEET, z_range[0])])
        hi = np.column_stack([nominal[:, 0] + half_x, nominal[:, 1] + half_y, np.full(N_FEET, z_range[1])])
        return lo, hi

    @property
    def g(self) -> np.ndarray:
        return np.asarray(self.gravity, dtype=np.float64)

    @property
    def nominal(self) -> np.ndarray:
        return np.asarray(self.nominal_footholds, dtype=np.float64)

    @property
    def kinematic_box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.box_lower, dtype=np.float64), np.asarray(self.box_upper, dtype=np.float64)

    def replace(self, **changes) -> "RobotModel":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RobotModel(**data)

    def to_dict(self) -> dict:
        return {"mass": self.mass, "gravity": list(self.gravity), "h_com": self.h_com,
                "nominal_footholds": [list(p) for p in self.nominal_footholds],
                "box_lower": [list(p) for p in self.box_lower],
                "box_upper": [list(p) for p in self.box_upper],
                "friction_coeff": self.friction_coeff, "max_normal_force": self.max_normal_force,
                "max_step": self.max_step}

    @classmethod
    def from_dict(cls, data: dict) -> "RobotModel":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown robot model fields: {sorted(unknown)}")
        kw = dict(data)
        for key in ("gravity",):
            if key in kw:
                kw[key] = tuple(kw[key])
        for key in ("nominal_footholds", "box_lower", "box_upper"):
            if kw.get(key) is not None:
                kw[key] = tuple(tuple(float(v) for v in row) for row in kw[key])
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class SupportPhase:
    """One support phase: base pose and velocity, feet, contacts and timings."""

    R_B: np.ndarray
    r_B: np.ndarray
    v_B: np.ndarray
    r_F: np.ndarray
    c_F: np.ndarray
    t_E: float = 1.0
    t_S: float = 1.0

    def __post_init__(self):
        R = np.array(self.R_B, dtype=np.float64).reshape(3, 3)
        arrays = {"R_B": R,
                  "r_B": np.array(self.r_B, dtype=np.float64).reshape(3),
                  "v_B": np.array(self.v_B, dtype=np.float64).reshape(3),
                  "r_F": np.array(self.r_F, dtype=np.float64).reshape(N_FEET, 3),
                  "c_F": np.array(self.c_F, dtype=np.int64).reshape(N_FEET)}
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t_E", float(self.t_E))
        object.__setattr__(self, "t_S", float(self.t_S))
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("R_B must be a proper rotation matrix")
        if not (self.t_E > 0 and self.t_S > 0):
            raise ValueError(f"phase timings must be positive, got t_E={self.t_E}, t_S={self.t_S}")
        if not np.all((self.c_F == 0) | (self.c_F == 1)):
            raise ValueError("contact flags must be 0 or 1")
        if int(self.c_F.sum()) not in (3, 4):
            raise ValueError(f"a phase needs 3 or 4 closed contacts, got {self.c_F.tolist()}")

    @property
    def yaw(self) -> float:
        return yaw_of(self.R_B)

    @property
    def contacts(self) -> np.ndarray:
        return self.c_F.astype(bool)

    def __eq__(self, other):
        if not isinstance(other, SupportPhase):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("R_B", "r_B", "v_B", "r_F", "c_F")) and \
            self.t_E == other.t_E and self.t_S == other.t_S

    def replace(self, **changes) -> "SupportPhase":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return SupportPhase(**data)

    def to_dict(self) -> dict:
        return {"R_B": self.R_B.ravel().tolist(), "r_B": self.r_B.tolist(), "v_B": self.v_B.tolist(),
                "r_F": self.r_F.tolist(), "c_F": self.c_F.tolist(), "t_E": self.t_E, "t_S": self.t_S}

    @classmethod
    def from_dict(cls, data: dict, where: str = "phase") -> "SupportPhase":
        from .io import require_fields

        require_fields(data, ("R_B", "r_B", "v_B", "r_F", "c_F", "t_E", "t_S"), where)
        return cls(R_B=np.asarray(data["R_B"], dtype=np.float64).reshape(3, 3), r_B=data["r_B"],
                   v_B=data["v_B"], r_F=data["r_F"], c_F=data["c_F"], t_E=data["t_E"], t_S=data["t_S"])


def phase_on_terrain(phase: SupportPhase, heightmap: HeightMap, tol: float = 1e-6) -> bool:
    """True when every closed-contact foot sits on the terrain surface."""
    closed = phase.contacts
    z = heightmap.elevations_at(phase.r_F[closed, :2])
    return bool(np.all(np.abs(phase.r_F[closed, 2] - z) <= tol))


ACTION_FIELDS = (("a_R", 1), ("a_B", 2), ("a_v", 2), ("a_F", 8), ("a_c", 3), ("a_t", 2))
ACTION_DIM = sum(n for _, n in ACTION_FIELDS)


@dataclass(frozen=True, eq=False)
class PlannerAction:
    """Planner action; every component lies in [-1, 1]."""

    a_R: float = 0.0
    a_B: np.ndarray = field(default_factory=lambda: np.zeros(2))
    a_v: np.ndarray = field(default_factory=lambda: np.zeros(2))
    a_F: np.ndarray = field(default_factory=lambda: np.zeros(8))
    a_c: np.ndarray = field(default_factory=lambda: np.ones(3))
    a_t: np.ndarray = field(default_factory=lambda: np.zeros(2))
    clip: bool = False

    def __post_init__(self):
        for name, n in ACTION_FIELDS:
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(n)
            if self.clip:
                arr = np.clip(arr, -1.0, 1.0)
            elif not np.all(np.abs(arr) <= 1.0):
                raise ValueError(f"action component {name}={arr.tolist()} outside the clip range [-1, 1]")
            arr.setflags(write=False)
            object.__setattr__(self, name, float(arr[0]) if name == "a_R" else arr)
        object.__setattr__(self, "clip", False)

    def __eq__(self, other):
        if not isinstance(other, PlannerAction):
            return NotImplemented
        return np.array_equal(self.to_vector(), other.to_vector())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.atleast_1d(getattr(self, name)) for name, _ in ACTION_FIELDS])

    @classmethod
    def from_vector(cls, vec, clip: bool = False) -> "PlannerAction":
        vec = np.asarray(vec, dtype=np.float64).reshape(ACTION_DIM)
        parts, i = {}, 0
        for name, n in ACTION_FIELDS:
            parts[name] = vec[i:i + n]
            i += n
        return cls(**parts, clip=clip)

    def to_dict(self) -> dict:
        return {name: (self.a_R if name == "a_R" else getattr(self, name).tolist())
                for name, _ in ACTION_FIELDS}

    @classmethod
    def from_dict(cls, data: dict, clip: bool = False) -> "PlannerAction":
        from .io import require_fields

        require_fields(data, [name for name, _ in ACTION_FIELDS], "action")
        return cls(**{name: data[name] for name, _ in ACTION_FIELDS}, clip=clip)


@dataclass(frozen=True, eq=False)
class PlannerObservation:
    o_R: float
    o_v: np.ndarray
    o_F: np.ndarray
    o_c: np.ndarray
    o_M: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, PlannerObservation):
            return NotImplemented
        return self.o_R == other.o_R and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("o_v", "o_F", "o_c", "o_M"))

    def to_dict(self) -> dict:
        return {"o_R": self.o_R, "o_v": self.o_v.tolist(), "o_F": self.o_F.tolist(),
                "o_c": self.o_c.tolist(), "o_M": self.o_M.tolist()}

    def proprioceptive(self) -> np.ndarray:
        return np.concatenate([[self.o_R], self.o_v, self.o_F, self.o_c])


# contact code -> flags; codes 0-3 lift exactly one foot, 4-7 keep full stance
CONTACT_TABLE = np.array([[0, 1, 1, 1],
                          [1, 0, 1, 1],
                          [1, 1, 0, 1],
                          [1, 1, 1, 0],
                          [1, 1, 1, 1],
                          [1, 1, 1, 1],
                          [1, 1, 1, 1],
                          [1, 1, 1, 1]], dtype=np.int64)


def contact_code(a_c) -> int:
    bits = (np.asarray(a_c, dtype=np.float64).reshape(3) >= 0.0).astype(int)
    return int(4 * bits[0] + 2 * bits[1] + bits[2])


def decode_contacts(a_c) -> np.ndarray:
    """Binarize the 3-vector (``>= 0`` is 1, first entry most significant) and look up the flags."""
    return CONTACT_TABLE[contact_code(a_c)].copy()


def apply_action(phase: SupportPhase, action: PlannerAction, heightmap: HeightMap,
                 model: RobotModel) -> SupportPhase:
    """Candidate successor phase for ``action``.

    Feet in contact in both phases keep their world footholds; every other
    foot is placed at its nominal foothold plus the scaled action offset in
    the rotated base frame, then snapped to the terrain.  The base sits
    ``h_com`` above the lowest closed-contact foothold.
    """
    R_new = rot_z(YAW_STEP * action.a_R) @ phase.R_B
    yaw = yaw_of(R_new)
    P = _planar(yaw)
    base_xy = phase.r_B[:2] + P @ (TRANSLATION_STEP * action.a_B)
    contacts = decode_contacts(action.a_c)
    keep = (phase.c_F == 1) & (contacts == 1)
    feet = phase.r_F.copy()
    offsets = model.nominal + FOOT_STEP * action.a_F.reshape(N_FEET, 2)
    moved = ~keep
    if moved.any():
        xy = base_xy + offsets[moved] @ P.T
        feet[moved, :2] = xy
        feet[moved, 2] = heightmap.elevations_at(xy)
    base_z = feet[contacts == 1, 2].min() + model.h_com
    velocity = np.zeros(3)
    velocity[:2] = P @ action.a_v
    t_E, t_S = 1.0 + TIMING_SCALE * action.a_t
    return SupportPhase(R_B=R_new, r_B=[base_xy[0], base_xy[1], base_z], v_B=velocity,
                        r_F=feet, c_F=contacts, t_E=t_E, t_S=t_S)


def goal_bearing(phase: SupportPhase, goal_xy) -> float:
    """Angle of the goal in the planar base frame (``atan2(y, x)``)."""
    d = _planar(phase.yaw).T @ (np.asarray(goal_xy, dtype=np.float64)[:2] - phase.r_B[:2])
    return math.atan2(d[1], d[0])


def foot_offsets(phase: SupportPhase, model: RobotModel) -> np.ndarray:
    """Per-foot planar position relative to its nominal foothold, base frame, shape ``(4, 2)``."""
    rel = (phase.r_F[:, :2] - phase.r_B[:2]) @ _planar(phase.yaw)
    return rel - model.nominal


def build_observation(phase: SupportPhase, goal_xy, heightmap: HeightMap,
                      model: RobotModel) -> PlannerObservation:
    P = _planar(phase.yaw)
    bearing = goal_bearing(phase, goal_xy)
    return PlannerObservation(
        o_R=-bearing if bearing != 0.0 else 0.0,
        o_v=P.T @ phase.v_B[:2],
        o_F=foot_offsets(phase, model).reshape(8),
        o_c=(2 * phase.c_F - 1).astype(np.float64),
        o_M=local_heightmap(heightmap, phase.r_B[:2], phase.yaw, phase.r_B[2]),
    )


def interpolate_attitudes(R_from: np.ndarray, R_to: np.ndarray, K: int) -> np.ndarray:
    """``K`` attitudes from ``R_from`` to ``R_to`` at constant angular velocity."""
    if K < 1:
        raise ValueError("K must be at least 1")
    R_from = np.asarray(R_from, dtype=np.float64)
    R_to = np.asarray(R_to, dtype=np.float64)
    out = np.empty((K, 3, 3))
    out[0] = R_from
    if K == 1:
        return out
    rotvec = Rotation.from_matrix(R_from.T @ R_to).as_rotvec()
    if K > 2:
        s = np.arange(1, K - 1) / (K - 1)
        steps = Rotation.from_rotvec(s[:, None] * rotvec).as_matrix()
        out[1:K - 1] = R_from @ steps
    out[K - 1] = R_to
    return out
