from .ipm import IpmModel, IpmSimplexCost, cop, ipm_accel, ipm_step, ipm_initial_state
from .srbm import (
    SrbmModel,
    SrbmModelCost,
    srbm_translational_accel,
    srbm_angular_accel,
    srbm_step,
    srbm_initial_state,
)
from .multi import MultiRobotModel, EmbeddedCost

__all__ = [
    "IpmModel",
    "IpmSimplexCost",
    "cop",
    "ipm_accel",
    "ipm_step",
    "ipm_initial_state",
    "SrbmModel",
    "SrbmModelCost",
    "srbm_translational_accel",
    "srbm_angular_accel",
    "srbm_step",
    "srbm_initial_state",
    "MultiRobotModel",
    "EmbeddedCost",
]
