"""Approximate-computing techniques for GPUs, run on a deterministic SIMT simulator."""

from .directives import ApproxSpec, ArraySection, DirectiveError, Technique, parse_directive, unparse
from .hierarchy import HierarchyLevel, decide_team, decide_warp
from .iact import IactConfig, MemoTable, euclid_dist, lookup, select_writer, warp_memo_phase
from .metrics import TrialRecord, convergence_speedup, footprint_per_thread_tables, mape, mcr
from .perfo import PerfoConfig, PerfoKind, rewrite_bounds, should_skip
from .region import ApproxRegion, MapKernel, run_map
from .simt import (BarrierDivergence, CostModel, GridConfig, KernelStats, SharedArenaOverflow,
                   ballot, launch_kernel, popcount)
from .taf import TafConfig, TafState, rsd, taf_reference_oracle, taf_step

__version__ = "0.1.0"
