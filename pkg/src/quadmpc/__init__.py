"""Joint base-trajectory and foothold optimization for quadruped MPC."""

import os as _os

# The solver works on sub-300-dim matrices where multi-threaded BLAS loses
# far more to thread churn than it gains (9x slowdown measured on 2 cores).
_os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
_os.environ.setdefault("OMP_NUM_THREADS", "1")
try:  # effective even when numpy was imported before us
    from threadpoolctl import threadpool_limits as _threadpool_limits

    _BLAS_LIMIT = _threadpool_limits(limits=1, user_api="blas")
except Exception:  # pragma: no cover - threadpoolctl is optional
    _BLAS_LIMIT = None

from .exceptions import (
    DivergedRolloutError,
    InfeasibleGaitError,
    QuadMpcError,
    ScenarioError,
    SingularDynamicsError,
    SingularPendulumError,
)
from .ocp import (
    CostEval,
    CostTerm,
    DynamicsModel,
    ProblemDims,
    SensitivityMatrix,
    SolveStats,
    SolverOptions,
    StackedTrajectory,
    StepJacobians,
    cost_gradient,
    cost_value,
    gn_hessian,
    residuals,
    rollout,
    sensitivity,
    solve,
)
from .locomotion import (
    CommandInput,
    GaitSchedule,
    GaitSpec,
    LocomotionProblem,
    ReferencePlan,
    TrackingCost,
    assemble_locomotion_ocp,
    build_gait_schedule,
    build_reference_plan,
    initial_state,
    reference_base_trajectory,
    reference_footholds,
)
from .robot import RobotParams, default_robot_params, load_robot_params
from .scenarios import (
    CollisionCost,
    Disturbance,
    GapCost,
    GapSpec,
    MultiRobotSpec,
    Scenario,
    SteppingStoneCost,
    StoneField,
    load_scenario,
    validate_footholds,
)
from .simloop import MpcState, SimLog, SimState, apply_disturbance, mpc_step, simulate, write_log
from .smooth import SmoothPlusParams, smooth_plus, smooth_plus_d1, smooth_plus_d2

__version__ = "0.1.0"
