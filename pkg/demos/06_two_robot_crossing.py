"""Two robots on crossing paths, planned as one optimal control problem.

The stacked state couples the robots only through the collision penalty,
which holds them a meter apart; both swerve, pass, and return to their
lanes.
"""

import numpy as np

from quadmpc.scenarios import bundled_scenario_path, load_scenario
from quadmpc.simloop import simulate, summarize

sc = load_scenario(bundled_scenario_path("two_robot"))
log = simulate(sc)
summary = summarize(log, sc)
ra = np.array([row.r[0] for row in log.rows])
rb = np.array([row.r[1] for row in log.rows])
print(f"min inter-robot distance: {summary['min_inter_robot_distance']:.3f} m")
print(f"robot a: start {ra[0][:2].round(2)} end {ra[-1][:2].round(2)}, "
      f"max lateral excursion {np.abs(ra[:, 1]).max():.2f} m")
print(f"robot b: start {rb[0][:2].round(2)} end {rb[-1][:2].round(2)}, "
      f"max lateral excursion {np.abs(rb[:, 1] - 0.25).max():.2f} m")
