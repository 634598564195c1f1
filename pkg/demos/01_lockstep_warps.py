"""Grid-stride launch on the software SIMT machine and what divergence costs."""
import numpy as np

from approxsim.directives import ApproxSpec
from approxsim.region import run_map
from approxsim.simt import CostModel, GridConfig, schedule

grid = GridConfig(num_teams=2, threads_per_team=64, items_per_thread=4)
print("threads:", grid.total_threads, " warps per team:", grid.warps_per_team)

# which items does thread 0 touch? stride is the whole grid
sched = schedule(grid, 500)
print("thread 0 items:", sched[0])
print("thread 127 items:", sched[127])   # ragged tail: one fewer

values = np.linspace(1, 2, 500)
base = run_map(None, lambda i: values[i], 500, grid)
print("\nbaseline cost", base.stats.estimated_cost, "warp steps", base.stats.total_warp_steps)

# even items are flat, odd ones noisy: lanes of one warp disagree on the path
mixed = np.where(np.arange(500) % 2 == 0, 3.0, np.random.default_rng(0).uniform(1, 9, 500))
spec = ApproxSpec.make_taf(2, 4, 0.1)
run = run_map(spec, lambda i: mixed[i], 500, grid)
print("mixed paths: approx rate %.2f, divergent steps %d/%d, cost %.1f"
      % (run.approx_rate, run.stats.divergent_warp_steps, run.stats.total_warp_steps,
         run.stats.estimated_cost))

# fewer warps than the latency-hiding proxy inflates every step
model = CostModel(resident_warps=16)
small = run_map(None, lambda i: values[i], 500, grid, model)
print("with resident_warps=16:", small.stats.estimated_cost)
