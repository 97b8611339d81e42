"""Support-phase gait planning with LP transition-feasibility screening."""

from .env import EnvConfig, GaitPlannerEnv, PlannerState
from .feasibility import transition_feasible
from .metrics import TouchdownEvent, TrackingLog, TrackingRecord, compute_fter, compute_fts
from .phase import PlannerAction, PlannerObservation, RobotModel, SupportPhase, apply_action, decode_contacts
from .planner import ShootingConfig, evaluate_esr, plan_to_goal
from .terrain import HeightMap, TerrainScenario, composite, flat_world, generate, random_stairs

__version__ = "0.1.0"
