"""Walking across a 32 cm rift.

The gap penalty pushes stepping locations out of the band around x = 1.0;
with the weight switched off the reference-following footholds drop
straight in. The table shows every executed foothold near the band.
"""

import numpy as np

from quadmpc.scenarios import bundled_scenario_path, load_scenario, validate_footholds
from quadmpc.simloop import simulate

for weight in ("default", "0.0"):
    overrides = {} if weight == "default" else {"terrain.gap_weight": weight}
    sc = load_scenario(bundled_scenario_path("gap"), overrides)
    log = simulate(sc)
    report = validate_footholds(log.executed_positions(0), sc.gaps, None)
    print(f"gap weight {sc.gap_weight}: {report.gap_violations} violations "
          f"out of {report.total} footholds")
    if weight == "default":
        gap = sc.gaps[0]
        rows = [
            (cyc, leg, pos[0])
            for (leg, cyc), (pos, _) in log.executed_footholds[0].items()
            if abs(pos[0] - gap.g_x) < 0.45
        ]
        print("  footholds near the band (cycle, leg, x):")
        for cyc, leg, x in sorted(rows):
            marker = "IN GAP" if abs(x - gap.g_x) < gap.half_width else ""
            print(f"    {cyc:3d} {leg} {x:+.3f} {marker}")
