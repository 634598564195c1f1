"""Letting the warp or the whole team vote on the path.

Thread-level decisions split warps.  If the accurate path contains a team
barrier, a split team never meets at it: the simulator aborts instead of
hanging.  A team-level vote keeps every thread on one path.
"""
import numpy as np

from approxsim.directives import ApproxSpec
from approxsim.hierarchy import HierarchyLevel
from approxsim.region import run_map
from approxsim.simt import BarrierDivergence, GridConfig

grid = GridConfig(1, 64, items_per_thread=12)
n = grid.capacity
vals = np.where(np.arange(n) % 2 == 0, 4.0, np.random.default_rng(5).uniform(1, 100, n))
base = run_map(None, lambda i: vals[i], n, grid).stats.estimated_cost

for level in HierarchyLevel:
    spec = ApproxSpec.make_taf(2, 4, 0.1, level=level)
    run = run_map(spec, lambda i: vals[i], n, grid)
    print(f"{level.value:6s} rate {run.approx_rate:.3f} divergent steps "
          f"{run.stats.divergent_warp_steps:3d} speedup {base / run.stats.estimated_cost:.2f}")

print()
for level in (HierarchyLevel.THREAD, HierarchyLevel.TEAM):
    spec = ApproxSpec.make_taf(2, 4, 0.1, level=level)
    try:
        run_map(spec, lambda i: vals[i], n, grid, has_barrier=True)
        print(level.value, "level: completed")
    except BarrierDivergence as e:
        print(level.value, "level:", e)
