import math

import numpy as np
import pytest

from gaitlp.env import GaitPlannerEnv
from gaitlp.phase import N_FEET, RobotModel, SupportPhase, rot_z
from gaitlp.terrain import flat_world


def make_stance(base_xy=(0.0, 0.0), yaw=0.0, ground=0.0, model=None, contacts=(1, 1, 1, 1),
                offsets=None, velocity=(0.0, 0.0, 0.0), t_S=1.0) -> SupportPhase:
    """Phase standing on flat ground at ``ground`` with feet at nominal (plus ``offsets``)."""
    model = model or RobotModel()
    c, s = math.cos(yaw), math.sin(yaw)
    P = np.array([[c, -s], [s, c]])
    rel = model.nominal + (np.zeros((N_FEET, 2)) if offsets is None else np.asarray(offsets))
    feet_xy = np.asarray(base_xy, dtype=float) + rel @ P.T
    feet = np.column_stack([feet_xy, np.full(N_FEET, ground)])
    return SupportPhase(R_B=rot_z(yaw), r_B=[base_xy[0], base_xy[1], ground + model.h_com], v_B=velocity,
                        r_F=feet, c_F=list(contacts), t_E=1.0, t_S=t_S)


@pytest.fixture(scope="session")
def model():
    return RobotModel()


@pytest.fixture(scope="session")
def flat_env():
    return GaitPlannerEnv.from_scenario(flat_world(side=12.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
