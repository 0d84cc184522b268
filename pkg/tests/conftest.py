import os

# the solver works on small matrices; multi-threaded BLAS only adds churn
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np
import pytest

from quadmpc.locomotion import (
    CommandInput,
    GaitSpec,
    assemble_locomotion_ocp,
    build_gait_schedule,
    build_reference_plan,
    initial_state,
)
from quadmpc.robot import default_robot_params


@pytest.fixture(scope="session")
def robot():
    return default_robot_params()


def make_problem(model_kind, robot, x0=None, cmd=None, gait=None, N=20, dt=0.04,
                 phase=0.0):
    gait = gait or GaitSpec.trot()
    cmd = cmd or CommandInput(target_height=0.3)
    schedule = build_gait_schedule(gait, phase, N, dt,
                                   require_stance=model_kind == "ipm")
    if x0 is None:
        x0 = initial_state(model_kind, [0.0, 0.0, 0.3], [0.0, 0.0, 0.0], dt)
    plan = build_reference_plan(cmd, schedule, x0[:3], 0.0, robot.hip_offsets, dt)
    return assemble_locomotion_ocp(model_kind, schedule, plan, [], x0, robot, dt)


@pytest.fixture
def ipm_problem(robot):
    return make_problem("ipm", robot)


@pytest.fixture
def srbm_problem(robot):
    return make_problem("srbm", robot)
