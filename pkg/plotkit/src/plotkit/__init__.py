"""Offline figure generation from quadmpc run logs."""

from .figures import plot_multi_robot, plot_terrain_scenario, plot_tracking
from .io import LogBundle, SchemaError, TRAJECTORY_COLUMNS

__version__ = "0.1.0"
