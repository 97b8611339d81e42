"""Convex transition-feasibility LP between two support phases.

The CoM follows a degree-4 Bezier curve over the transition.  Its end
positions and velocities come from the two phases, leaving the middle
control point ``x`` free.  Contact forces at ``K`` sample times are the
remaining decision variables.  With a zero angular-momentum rate the moment
balance ``sum p_i x f_i = m c x (c'' - g)`` stays linear, because the only
quadratic term is ``x x x = 0``.

Samples before the contact switch (which happens at the end of the
transition) use the source phase's support set.  The final sample uses the
candidate's.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .phase import N_FEET, RobotModel, SupportPhase, interpolate_attitudes
from .simplex import PhaseOneResult, SolverError, phase_one

DEFAULT_SAMPLES = 8
DEFAULT_TOLERANCE = 1e-6
BEZIER_DEGREE = 4
FREE_POINT = 2

__all__ = ["TransitionProblem", "TransitionLp", "assemble_transition_lp", "lp_feasible",
           "transition_feasible", "SolverError", "bezier_weights", "dump_lp", "load_lp"]


@dataclass(frozen=True)
class TransitionProblem:
    source: SupportPhase
    candidate: SupportPhase
    model: RobotModel
    duration: float | None = None
    n_samples: int = DEFAULT_SAMPLES
    pin_midpoint: np.ndarray | None = None

    def __post_init__(self):
        if self.duration is None:
            object.__setattr__(self, "duration", self.source.t_S)
        if not self.duration > 0:
            raise ValueError("transition duration must be positive")
        if self.n_samples < 2:
            raise ValueError("need at least two time samples")


@dataclass
class TransitionLp:
    """An assembled feasibility LP.

    ``layout`` maps ``"com_point"`` to the column slice of the free control
    point and ``"forces"`` to a list of ``(sample, foot, first_column)``
    entries.  Row kinds label each constraint for introspection.
    """

    n_vars: int
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    layout: dict
    eq_kinds: list = field(default_factory=list)
    ub_kinds: list = field(default_factory=list)
    infeasible_reason: str | None = None

    def __post_init__(self):
        for M, b, name in ((self.A_eq, self.b_eq, "equality"), (self.A_ub, self.b_ub, "inequality")):
            if M.shape[1] != self.n_vars or M.shape[0] != len(b):
                raise ValueError(f"{name} system has shape {M.shape} for {len(b)} rhs and {self.n_vars} vars")
        if len(self.lb) != self.n_vars or len(self.ub) != self.n_vars:
            raise ValueError("bounds must cover every variable")
        covered = np.zeros(self.n_vars, dtype=int)
        covered[self.layout["com_point"]] += 1
        for _, _, c in self.layout["forces"]:
            covered[c:c + 3] += 1
        if not np.all(covered == 1):
            raise ValueError("variable layout must cover every column exactly once")

    def count_rows(self, kind: str) -> int:
        return self.eq_kinds.count(kind) + self.ub_kinds.count(kind)


def bezier_weights(s: np.ndarray, degree: int = BEZIER_DEGREE) -> tuple[np.ndarray, np.ndarray]:
    """Bernstein weights and their second derivatives (w.r.t. ``s``), shape ``(len(s), degree+1)``."""
    s = np.asarray(s, dtype=np.float64)[:, None]
    i = np.arange(degree + 1)[None, :]
    binom = np.array([comb(degree, k) for k in range(degree + 1)], dtype=np.float64)
    w = binom * s ** i * (1 - s) ** (degree - i)
    j = np.arange(degree - 1)[None, :]
    lower = np.array([comb(degree - 2, k) for k in range(degree - 1)], dtype=np.float64)
    w2 = lower * s ** j * (1 - s) ** (degree - 2 - j)
    dd = np.zeros((len(s), degree + 1))
    dd[:, :-2] += w2
    dd[:, 1:-1] -= 2 * w2
    dd[:, 2:] += w2
    return w, degree * (degree - 1) * dd


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _skew_many(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def assemble_transition_lp(problem: TransitionProblem) -> TransitionLp:
    """Build the feasibility LP for one phase transition (zero cost)."""
    src, dst, model = problem.source, problem.candidate, problem.model
    K, T = problem.n_samples, float(problem.duration)
    m, g, mu, fmax = model.mass, model.g, model.friction_coeff, model.max_normal_force
    box_lo, box_hi = model.kinematic_box

    c0, cT = src.r_B, dst.r_B
    P = np.stack([c0, c0 + T * src.v_B / BEZIER_DEGREE, np.zeros(3),
                  cT - T * dst.v_B / BEZIER_DEGREE, cT])
    s = np.linspace(0.0, 1.0, K)
    w, dd = bezier_weights(s)
    beta, beta2 = w[:, FREE_POINT], dd[:, FREE_POINT] / T ** 2
    a = w @ P                         # fixed part of c(t_k)
    a2 = dd @ P / T ** 2              # fixed part of c''(t_k)
    R = interpolate_attitudes(src.R_B, dst.R_B, K)

    supports = []
    for k in range(K):
        phase = dst if k == K - 1 else src
        idx = np.flatnonzero(phase.c_F)
        supports.append((idx, phase.r_F[idx]))
    ks = np.concatenate([np.full(len(idx), k) for k, (idx, _) in enumerate(supports)])
    foot = np.concatenate([idx for idx, _ in supports])
    feet = np.concatenate([p for _, p in supports]).reshape(-1, 3)
    E = len(ks)
    n = 3 + 3 * E
    cols = 3 + 3 * np.arange(E)
    layout = {"com_point": slice(0, 3),
              "forces": [(int(k), int(f), int(c)) for k, f, c in zip(ks, foot, cols)]}

    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[cols + 2] = 0.0
    if problem.pin_midpoint is not None:
        lb[:3] = ub[:3] = np.asarray(problem.pin_midpoint, dtype=np.float64)

    r3 = np.arange(3)
    acc = a2 - g
    # force balance: sum f - m beta'' x = m (a'' - g)
    # moment balance: sum [p]x f - m (beta'' [a]x - beta [a''-g]x) x = m a x (a'' - g)
    A_eq = np.zeros((6 * K, n))
    blocks = A_eq[:, :3].reshape(K, 2, 3, 3)
    blocks[:, 0] = -m * beta2[:, None, None] * np.eye(3)
    blocks[:, 1] = -m * (beta2[:, None, None] * _skew_many(a) - beta[:, None, None] * _skew_many(acc))
    A_eq[:, :3] = blocks.reshape(6 * K, 3)
    b_eq = np.concatenate([m * acc, m * np.cross(a, acc)], axis=1).reshape(6 * K)
    rows = 6 * ks[:, None, None] + r3[None, :, None]
    cc = cols[:, None, None] + r3[None, None, :]
    A_eq[rows, cc] = np.eye(3)
    A_eq[rows + 3, cc] = _skew_many(feet)

    friction = np.array([[1, 0, -mu], [-1, 0, -mu], [0, 1, -mu], [0, -1, -mu], [0, 0, 1]], dtype=np.float64)
    n_kin = 6 * E
    A_ub = np.zeros((5 * E + n_kin, n))
    b_ub = np.zeros(5 * E + n_kin)
    fr = 5 * np.arange(E)[:, None, None] + np.arange(5)[None, :, None]
    A_ub[fr, cc] = friction
    b_ub[4:5 * E:5] = fmax
    # kinematics: lo <= R_k^T (p - a - beta x) <= hi
    Rt = np.transpose(R, (0, 2, 1))[ks]
    rel = np.einsum("eij,ej->ei", Rt, feet - a[ks])
    kin = A_ub[5 * E:].reshape(E, 2, 3, n)
    kin[:, 0, :, :3] = -beta[ks, None, None] * Rt
    kin[:, 1, :, :3] = beta[ks, None, None] * Rt
    kb = b_ub[5 * E:].reshape(E, 2, 3)
    kb[:, 0] = box_hi[foot] - rel
    kb[:, 1] = rel - box_lo[foot]
    n_contacts = E

    eq_kinds = ["force_balance"] * 3 + ["moment_balance"] * 3
    ub_kinds = (["friction"] * 4 + ["force_cap"]) * n_contacts + ["kinematic"] * n_kin
    reason = None if all(len(idx) for idx, _ in supports) else "empty support set"
    return TransitionLp(n, A_eq, b_eq, A_ub, b_ub, lb, ub, layout,
                        eq_kinds * K, ub_kinds, infeasible_reason=reason)


def solve_lp(lp: TransitionLp, tolerance: float = DEFAULT_TOLERANCE) -> PhaseOneResult:
    return phase_one(lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, lp.lb, lp.ub, n_vars=lp.n_vars, tol=tolerance)


def lp_feasible(lp: TransitionLp, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """True iff some point satisfies every constraint within ``tolerance``."""
    if lp.infeasible_reason is not None:
        return False
    return solve_lp(lp, tolerance).feasible


def endpoint_kinematics_ok(source: SupportPhase, candidate: SupportPhase, model: RobotModel,
                           tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """Kinematic rows at the first and last samples, where the free point has zero weight.

    These rows are part of every transition LP, so a failure here is an
    exact (and cheap) infeasibility certificate.
    """
    lo, hi = model.kinematic_box
    for phase in (source, candidate):
        idx = np.flatnonzero(phase.c_F)
        rel = (phase.r_F[idx] - phase.r_B) @ phase.R_B
        if np.any(rel > hi[idx] + tolerance) or np.any(rel < lo[idx] - tolerance):
            return False
    return True


def transition_feasible(source: SupportPhase, candidate: SupportPhase, model: RobotModel,
                        n_samples: int = DEFAULT_SAMPLES, tolerance: float = DEFAULT_TOLERANCE,
                        pin_midpoint=None) -> int:
    """1 when a dynamically consistent CoM motion connects the phases, else 0."""
    if not endpoint_kinematics_ok(source, candidate, model, tolerance):
        return 0
    problem = TransitionProblem(source, candidate, model, n_samples=n_samples, pin_midpoint=pin_midpoint)
    return int(lp_feasible(assemble_transition_lp(problem), tolerance))


def dump_lp(lp: TransitionLp) -> str:
    """Text serialization that reproduces a solve bit-exactly (floats as hex)."""
    def enc(arr):
        return [float(v).hex() for v in np.asarray(arr, dtype=np.float64).ravel()]

    doc = {"schema": "gaitlp.lp", "version": 1, "n_vars": lp.n_vars,
           "eq_rows": len(lp.b_eq), "ub_rows": len(lp.b_ub),
           "A_eq": enc(lp.A_eq), "b_eq": enc(lp.b_eq), "A_ub": enc(lp.A_ub), "b_ub": enc(lp.b_ub),
           "lb": enc(lp.lb), "ub": enc(lp.ub),
           "layout": {"com_point": [0, 3], "forces": lp.layout["forces"]},
           "eq_kinds": lp.eq_kinds, "ub_kinds": lp.ub_kinds,
           "infeasible_reason": lp.infeasible_reason}
    return json.dumps(doc)


def load_lp(text: str) -> TransitionLp:
    doc = json.loads(text)

    def dec(key, shape):
        return np.array([float.fromhex(v) for v in doc[key]], dtype=np.float64).reshape(shape)

    n, me, mu_ = doc["n_vars"], doc["eq_rows"], doc["ub_rows"]
    layout = {"com_point": slice(*doc["layout"]["com_point"]),
              "forces": [tuple(e) for e in doc["layout"]["forces"]]}
    return TransitionLp(n, dec("A_eq", (me, n)), dec("b_eq", me), dec("A_ub", (mu_, n)),
                        dec("b_ub", mu_), dec("lb", n), dec("ub", n), layout,
                        list(doc["eq_kinds"]), list(doc["ub_kinds"]), doc["infeasible_reason"])
