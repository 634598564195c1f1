"""Approximable regions executed on the SIMT machine.

An :class:`ApproxRegion` wraps one annotated code region for the lifetime of a
kernel launch.  Every invocation goes through the same sequence:

1. each active lane computes its activation predicate (TAF: in a prediction
   run; iACT: table hit; perforation: iteration is dropped);
2. the hierarchy level turns predicates into a path per lane;
3. lanes on the accurate path evaluate the region (meeting its barrier, if any);
4. technique state is updated and the warp step is charged to the cost model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import iact as _iact
from . import taf as _taf
from .directives import ApproxSpec, Technique
from .hierarchy import (VOTE_COUNTER_BYTES, VOTE_COUNTER_TAG, HierarchyLevel, decide_team,
                        decide_warp)
from .perfo import PerfoCounter, PerfoKind, rewrite_bounds, should_skip
from .simt import CostModel, GridConfig, KernelStats, TeamContext, launch_kernel

PERFO_COUNTER_BYTES = 4


@dataclass
class RegionResult:
    outputs: np.ndarray     # (lanes, out_dims); rows valid where ``written``
    approx: np.ndarray      # lane took the approximate path
    written: np.ndarray     # lane produced an output (skipped perforation lanes do not)


class ApproxRegion:
    def __init__(self, spec: ApproxSpec | None, out_dims: int = 1, has_barrier: bool = False,
                 trip_count: int | None = None, tag: str = "region"):
        self.spec = spec
        self.out_dims = out_dims
        self.has_barrier = has_barrier
        self.trip_count = trip_count
        self.tag = tag
        self.trace: list | None = None
        self.begin(None)

    @property
    def technique(self) -> Technique | None:
        return None if self.spec is None else self.spec.technique

    @property
    def level(self) -> HierarchyLevel:
        return HierarchyLevel.THREAD if self.spec is None else self.spec.level

    def shared_requirements(self, grid: GridConfig) -> list[tuple[str, int]]:
        t = self.technique
        reqs = []
        if t is Technique.TAF:
            reqs.append((f"{self.tag}:taf",
                         grid.threads_per_team * _taf.state_bytes(self.spec.taf, self.out_dims)))
        elif t is Technique.IACT:
            self.spec.iact.lanes_per_table(grid.warp_size)
            reqs.append((f"{self.tag}:iact",
                         grid.warps_per_team * _iact.table_group_bytes(self.spec.iact)))
        elif t is Technique.PERFO and not self.spec.perfo.kind.is_herded:
            reqs.append((f"{self.tag}:perfo", grid.threads_per_team * PERFO_COUNTER_BYTES))
        if t is not None and self.level is HierarchyLevel.TEAM:
            reqs.append((VOTE_COUNTER_TAG, VOTE_COUNTER_BYTES))
        return reqs

    def begin(self, grid: GridConfig | None) -> None:
        # AC state lives only as long as the kernel
        self.taf_states: dict[int, _taf.TafState] = {}
        self.tables: dict[int, list[_iact.MemoTable]] = {}
        self.counter = PerfoCounter()
        if self.trace is not None:
            self.trace.clear()

    # -- predicates -----------------------------------------------------------

    def _taf_predicates(self, team, lanes):
        cfg = self.spec.taf
        states = []
        pred = np.zeros(team.grid.threads_per_team, bool)
        for l in lanes:
            tid = int(team.thread_ids[l])
            st = self.taf_states.get(tid)
            if st is None:
                st = self.taf_states[tid] = _taf.TafState.fresh(cfg)
            states.append(st)
            pred[l] = _taf.wants_approx(st)
        return pred, states

    def _iact_read(self, team, inputs):
        cfg = self.spec.iact
        tpt = team.grid.threads_per_team
        hit = np.zeros(tpt, bool)
        has_entry = np.zeros(tpt, bool)
        cached = np.full((tpt, cfg.output_dims), np.nan)
        for w in team.warps:
            if w.active_count == 0:
                continue
            tables = self.tables.get(w.warp_id)
            if tables is None:
                tables = self.tables[w.warp_id] = [
                    _iact.MemoTable.for_config(cfg) for _ in range(cfg.tables_per_warp)]
            r = _iact.read_phase(w, cfg, tables, inputs[w.lanes])
            hit[w.lanes], has_entry[w.lanes], cached[w.lanes] = r.hit, r.has_entry, r.cached
        return hit, has_entry, cached

    def _perfo_predicates(self, team, lanes):
        cfg = self.spec.perfo
        pred = np.zeros(team.grid.threads_per_team, bool)
        if cfg.kind.is_herded:
            pred[lanes] = should_skip(cfg, team.step_index)
        elif cfg.kind.is_modulus:
            for l in lanes:
                pred[l] = should_skip(cfg, self.counter.next(int(team.thread_ids[l])))
        else:
            trip = self.trip_count
            for l in lanes:
                pred[l] = should_skip(cfg, int(team.items[l]), trip)
        return pred

    # -- decision ---------------------------------------------------------------

    def _decide(self, team: TeamContext, pred: np.ndarray) -> np.ndarray:
        act = team.active
        level = self.level
        if level is HierarchyLevel.THREAD:
            return pred & act
        dec = np.zeros_like(act)
        if level is HierarchyLevel.WARP:
            for w in team.warps:
                if w.active_count:
                    dec[w.lanes] = decide_warp(w, pred[w.lanes]).decision
            return dec & act
        vote = decide_team(team, pred & act)
        return act & vote.decision

    # -- invocation ---------------------------------------------------------------

    def invoke(self, team: TeamContext, evaluate, inputs=None) -> RegionResult:
        """Run the region for every active lane of ``team``.

        ``evaluate(lanes)`` receives team-lane indices and returns one output row
        per lane.  ``inputs`` is a (lanes, input_dims) array, needed for iACT.
        """
        tpt = team.grid.threads_per_team
        act = team.active
        lanes = np.flatnonzero(act)
        outputs = np.full((tpt, self.out_dims), np.nan)
        t = self.technique

        if t is None:
            self._evaluate_into(team, evaluate, act, outputs)
            for w in team.warps:
                team.charge(w, np.zeros(w.lane_count, bool))
            return RegionResult(outputs, np.zeros(tpt, bool), act.copy())

        if t is Technique.TAF:
            pred, states = self._taf_predicates(team, lanes)
        elif t is Technique.IACT:
            inputs = np.asarray(inputs, dtype=float).reshape(tpt, self.spec.iact.input_dims)
            hit, has_entry, cached = self._iact_read(team, inputs)
            pred = hit
        else:
            pred = self._perfo_predicates(team, lanes)

        dec = self._decide(team, pred)
        # a lane with nothing to replay cannot approximate, whatever the vote says
        if t is Technique.TAF:
            for l, st in zip(lanes, states):
                if dec[l] and st.last_output is None:
                    dec[l] = False
        elif t is Technique.IACT:
            dec &= has_entry
        acc = act & ~dec

        written = act.copy()
        overhead = np.zeros(len(team.warps))
        if t is Technique.TAF:
            cfg = self.spec.taf
            checked = np.zeros(tpt, bool)
            for l, st in zip(lanes, states):
                checked[l] = not dec[l] and _taf.will_check(st)
            self._evaluate_into(team, evaluate, acc, outputs)
            for l, st in zip(lanes, states):
                row = outputs[l]
                out, _ = _taf.taf_advance(st, cfg, bool(dec[l]), lambda: row.copy())
                outputs[l] = out
            per_check = team.model.cost_lookup_per_entry * cfg.h_size * self.out_dims
            for k, w in enumerate(team.warps):
                if checked[w.lanes].any():
                    overhead[k] = per_check
        elif t is Technique.IACT:
            cfg = self.spec.iact
            outputs[dec] = cached[dec]
            self._evaluate_into(team, evaluate, acc, outputs)
            writers = acc & ~hit
            scan = team.model.cost_lookup_per_entry * cfg.table_size
            shared = cfg.lanes_per_table(team.grid.warp_size) > 1
            for k, w in enumerate(team.warps):
                if w.active_count == 0:
                    continue
                writes = _iact.write_phase(w, cfg, self.tables[w.warp_id], inputs[w.lanes],
                                           outputs[w.lanes], writers[w.lanes])
                if self.trace is not None:
                    self.trace.append((w.warp_id, w.step_index,
                                       [int(x) for x in np.flatnonzero(hit[w.lanes] & act[w.lanes])],
                                       writes))
                # every lane scans its table; a shared table adds the phase barrier
                overhead[k] = scan + (team.model.cost_decision if shared else 0.0)
        else:
            self._evaluate_into(team, evaluate, acc, outputs)
            written = acc.copy()

        voted = self.level is not HierarchyLevel.THREAD
        for k, w in enumerate(team.warps):
            team.charge(w, dec[w.lanes], overhead[k], voted)
        return RegionResult(outputs, dec, written)

    def _evaluate_into(self, team, evaluate, mask, outputs) -> None:
        lanes = np.flatnonzero(mask)
        if not lanes.size:
            return
        if self.has_barrier:
            team.barrier(mask)
        vals = np.asarray(evaluate(lanes), dtype=float).reshape(lanes.size, self.out_dims)
        outputs[lanes] = vals


class MapKernel:
    """Element-wise kernel ``out[i] = func(i)`` whose body is one approximable region.

    ``func`` takes an array of item indices and returns one output row each.
    ``inputs`` (n, input_dims) feeds iACT lookups.
    """

    def __init__(self, region: ApproxRegion, func, out: np.ndarray, inputs=None,
                 offset: int = 0):
        self.region = region
        self.func = func
        self.out = out
        self.inputs = inputs
        self.offset = offset

    def shared_requirements(self, grid):
        return self.region.shared_requirements(grid)

    def begin(self, grid):
        self.region.begin(grid)

    def __call__(self, team: TeamContext):
        items = np.where(team.active, team.items + self.offset, -1)
        inp = None
        if self.inputs is not None:
            inp = self.inputs[np.where(team.active, items, 0)]
        res = self.region.invoke(team, lambda lanes: self.func(items[lanes]), inp)
        w = res.written
        self.out[items[w]] = res.outputs[w].reshape(self.out[items[w]].shape)


@dataclass
class MapRun:
    out: np.ndarray
    stats: KernelStats
    n: int
    bound_skipped: int = 0

    @property
    def total_invocations(self) -> int:
        return self.stats.total_invocations + self.bound_skipped

    @property
    def approx_invocations(self) -> int:
        return self.stats.approx_invocations + self.bound_skipped

    @property
    def approx_rate(self) -> float:
        tot = self.total_invocations
        return self.approx_invocations / tot if tot else 0.0


def run_map(spec: ApproxSpec | None, func, n: int, grid: GridConfig, model: CostModel | None = None,
            out: np.ndarray | None = None, inputs=None, out_dims: int = 1,
            has_barrier: bool = False) -> MapRun:
    """Launch a :class:`MapKernel` over ``n`` items.

    ini/fini perforation rewrites the loop bounds, so the dropped iterations are
    never launched; they still count as approximated invocations in the result.
    """
    if out is None:
        out = np.zeros((n, out_dims)) if out_dims > 1 else np.zeros(n)
    lo, hi = 0, n
    if (spec is not None and spec.technique is Technique.PERFO
            and spec.perfo.kind in (PerfoKind.INI, PerfoKind.FINI) and n > 0):
        lo, hi = rewrite_bounds(spec.perfo, 0, n)
        spec = None
    region = ApproxRegion(spec, out_dims=out_dims, has_barrier=has_barrier)
    kernel = MapKernel(region, func, out, inputs, offset=lo)
    stats = launch_kernel(grid, kernel, hi - lo, model)
    return MapRun(out, stats, n, bound_skipped=n - (hi - lo))
