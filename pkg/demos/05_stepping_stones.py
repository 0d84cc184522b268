"""Walking a 20 cm stepping-stone grid.

Attractive Gaussian wells snap each stepping location onto the nearest
stone; the run reports how far every executed foothold ended up from its
stone center.
"""

import numpy as np

from quadmpc.scenarios import bundled_scenario_path, load_scenario, validate_footholds
from quadmpc.simloop import simulate

sc = load_scenario(bundled_scenario_path("stones"))
log = simulate(sc)
feet = log.executed_positions(0)
report = validate_footholds(feet, [], sc.stones)
dists = np.min(
    np.linalg.norm(feet[:, None, :] - sc.stones.stones[None], axis=2), axis=1
)
on = report.total - report.stone_violations
print(f"{on}/{report.total} footholds within the {sc.stones.radius:.2f} m radius")
print(f"snap distance to stone centers [mm]: "
      f"p50 {np.percentile(dists, 50) * 1e3:.1f}, "
      f"p95 {np.percentile(dists, 95) * 1e3:.1f}, "
      f"max {dists.max() * 1e3:.1f}")
