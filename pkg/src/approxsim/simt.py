"""Deterministic software SIMT machine.

A launch walks the grid-stride schedule one step at a time.  Within a step,
each team is handed to the kernel body as a :class:`TeamContext` whose lanes
all advance together, so warp collectives, team barriers and the shared arena
behave as if every thread of the team sat at the same lockstep point.

Timing is not simulated.  Each region invocation is charged to a
:class:`CostModel` with the lockstep rule: a warp pays for the slowest path any
of its active lanes takes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class SimtFault(RuntimeError):
    """Illegal operation inside the simulator (bad arena access, bad mask)."""


class SharedArenaOverflow(SimtFault):
    def __init__(self, required: int, available: int, tag: str = ""):
        self.required = required
        self.available = available
        self.tag = tag
        what = f" for {tag!r}" if tag else ""
        super().__init__(
            f"shared arena overflow{what}: {required} bytes required, "
            f"{available} bytes available"
        )


class KernelAborted(RuntimeError):
    """Raised when a launch stops early.  ``stats`` holds the counters so far."""

    stats: "KernelStats"


class BarrierDivergence(KernelAborted):
    def __init__(self, team_id: int, step_index: int, missing: list[int]):
        self.team_id = team_id
        self.step_index = step_index
        self.missing = missing
        self.stats = None
        shown = missing[:8]
        more = "" if len(missing) <= 8 else f" (+{len(missing) - 8} more)"
        super().__init__(
            f"barrier divergence in team {team_id} at step {step_index}: "
            f"threads {shown}{more} never reached the barrier"
        )


@dataclass(frozen=True)
class GridConfig:
    num_teams: int
    threads_per_team: int
    warp_size: int = 32
    items_per_thread: int = 1
    shared_mem_budget_bytes: int = 48 * 1024

    def __post_init__(self):
        for name in ("num_teams", "threads_per_team", "warp_size", "items_per_thread"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.shared_mem_budget_bytes < 0:
            raise ValueError("shared_mem_budget_bytes must be non-negative")
        if self.threads_per_team % self.warp_size:
            raise ValueError(
                f"warp_size {self.warp_size} does not divide "
                f"threads_per_team {self.threads_per_team}"
            )

    @classmethod
    def for_items(cls, n: int, threads_per_team: int, items_per_thread: int, **kw) -> "GridConfig":
        """Smallest grid covering ``n`` items with the given per-thread load."""
        per_team = threads_per_team * items_per_thread
        teams = max(1, -(-n // per_team))
        return cls(teams, threads_per_team, items_per_thread=items_per_thread, **kw)

    @property
    def total_threads(self) -> int:
        return self.num_teams * self.threads_per_team

    @property
    def warps_per_team(self) -> int:
        return self.threads_per_team // self.warp_size

    @property
    def capacity(self) -> int:
        return self.total_threads * self.items_per_thread


@dataclass(frozen=True)
class CostModel:
    """Lockstep warp cost constants.

    ``resident_warps`` is a latency-hiding proxy: a launch with fewer warps than
    this cannot keep the device busy and every warp step is scaled by
    ``resident_warps / launched_warps``.  Zero disables the penalty.
    """

    cost_accurate: float = 1.0
    cost_approx: float = 0.05
    cost_lookup_per_entry: float = 0.02
    cost_decision: float = 0.01
    resident_warps: int = 0

    def __post_init__(self):
        for name in ("cost_accurate", "cost_approx", "cost_lookup_per_entry",
                     "cost_decision", "resident_warps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.cost_approx > self.cost_accurate:
            warnings.warn("cost_approx exceeds cost_accurate; approximation can only slow down",
                          stacklevel=3)

    def occupancy_factor(self, launched_warps: int) -> float:
        if self.resident_warps == 0 or launched_warps == 0:
            return 1.0
        return max(1.0, self.resident_warps / launched_warps)


@dataclass(frozen=True)
class KernelStats:
    total_invocations: int = 0
    approx_invocations: int = 0
    divergent_warp_steps: int = 0
    total_warp_steps: int = 0
    estimated_cost: float = 0.0
    barrier_divergence_detected: bool = False
    work: float = 0.0
    launched_warps: int = 0

    @property
    def approx_rate(self) -> float:
        return self.approx_invocations / self.total_invocations if self.total_invocations else 0.0

    @property
    def divergent_fraction(self) -> float:
        return self.divergent_warp_steps / self.total_warp_steps if self.total_warp_steps else 0.0

    def __add__(self, other: "KernelStats") -> "KernelStats":
        return KernelStats(
            self.total_invocations + other.total_invocations,
            self.approx_invocations + other.approx_invocations,
            self.divergent_warp_steps + other.divergent_warp_steps,
            self.total_warp_steps + other.total_warp_steps,
            self.estimated_cost + other.estimated_cost,
            self.barrier_divergence_detected or other.barrier_divergence_detected,
            self.work + other.work,
            max(self.launched_warps, other.launched_warps),
        )


@dataclass
class StatsAccumulator:
    """Mutable counters filled during a launch; frozen into KernelStats at the end."""

    total_invocations: int = 0
    approx_invocations: int = 0
    divergent_warp_steps: int = 0
    total_warp_steps: int = 0
    work: float = 0.0
    barrier_divergence_detected: bool = False

    def freeze(self, model: CostModel, launched_warps: int) -> KernelStats:
        return KernelStats(
            total_invocations=self.total_invocations,
            approx_invocations=self.approx_invocations,
            divergent_warp_steps=self.divergent_warp_steps,
            total_warp_steps=self.total_warp_steps,
            estimated_cost=self.work * model.occupancy_factor(launched_warps),
            barrier_divergence_detected=self.barrier_divergence_detected,
            work=self.work,
            launched_warps=launched_warps,
        )


@dataclass(frozen=True)
class Allocation:
    offset: int
    length: int
    tag: str


class SharedArena:
    """Per-team shared memory with a hard byte budget."""

    def __init__(self, capacity_bytes: int):
        self.capacity_bytes = capacity_bytes
        self.allocations: list[Allocation] = []
        self._mem = bytearray(capacity_bytes)
        self._top = 0

    @property
    def used_bytes(self) -> int:
        return self._top

    def alloc(self, nbytes: int, tag: str) -> Allocation:
        if nbytes < 0:
            raise ValueError("allocation size must be non-negative")
        # 8-byte alignment keeps int64/float64 views legal
        offset = -(-self._top // 8) * 8
        if offset + nbytes > self.capacity_bytes:
            raise SharedArenaOverflow(offset + nbytes, self.capacity_bytes, tag)
        a = Allocation(offset, nbytes, tag)
        self.allocations.append(a)
        self._top = offset + nbytes
        return a

    def _check(self, cell: Allocation, nbytes: int) -> None:
        if cell not in self.allocations:
            raise SimtFault(f"access to unallocated shared cell {cell}")
        if nbytes > cell.length:
            raise SimtFault(f"access of {nbytes} bytes exceeds cell {cell}")

    def view(self, cell: Allocation, dtype=np.int64) -> np.ndarray:
        dtype = np.dtype(dtype)
        self._check(cell, dtype.itemsize)
        count = cell.length // dtype.itemsize
        return np.frombuffer(self._mem, dtype=dtype, count=count, offset=cell.offset)

    def find(self, tag: str) -> Allocation:
        for a in self.allocations:
            if a.tag == tag:
                return a
        raise SimtFault(f"no shared allocation tagged {tag!r}")


def arena_bytes(requests) -> int:
    """Bytes a SharedArena needs for ``(tag, nbytes)`` requests, alignment included."""
    top = 0
    for _, nbytes in requests:
        top = -(-top // 8) * 8 + nbytes
    return top


def atomic_add_shared(arena: SharedArena, cell: Allocation, value: int) -> int:
    """Add ``value`` to the int64 stored at ``cell``; returns the previous value."""
    v = arena.view(cell, np.int64)
    prev = int(v[0])
    v[0] = prev + int(value)
    return prev


@dataclass(frozen=True)
class WarpContext:
    warp_id: int            # global warp index
    team_id: int
    lane_offset: int        # first lane of this warp inside its team
    lane_count: int
    active_mask: int
    step_index: int

    def __post_init__(self):
        if self.active_mask >> self.lane_count:
            raise SimtFault(f"active mask {self.active_mask:#x} wider than {self.lane_count} lanes")

    @property
    def lanes(self) -> slice:
        return slice(self.lane_offset, self.lane_offset + self.lane_count)

    @property
    def active_count(self) -> int:
        return popcount(self.active_mask)

    def is_active(self, lane: int) -> bool:
        return bool(self.active_mask >> lane & 1)

    def active_lanes(self) -> list[int]:
        return [i for i in range(self.lane_count) if self.active_mask >> i & 1]


def mask_from_bools(flags) -> int:
    m = 0
    for i, f in enumerate(flags):
        if f:
            m |= 1 << i
    return m


def ballot(warp: WarpContext, predicates) -> int:
    """Bit ``i`` is set iff lane ``i`` is active and its predicate holds."""
    preds = np.asarray(predicates, dtype=bool)
    if preds.shape != (warp.lane_count,):
        raise SimtFault(f"ballot needs {warp.lane_count} predicates, got {preds.shape}")
    return mask_from_bools(preds) & warp.active_mask


def popcount(mask: int) -> int:
    if mask < 0:
        raise ValueError("popcount of a negative mask")
    return int(mask).bit_count()


def accumulate_cost(stats: StatsAccumulator, warp: WarpContext, approx_flags,
                    model: CostModel, overhead: float = 0.0, voted: bool = False) -> None:
    """Charge one lockstep region invocation of ``warp``.

    ``approx_flags[i]`` is True when lane ``i`` took the approximate path;
    inactive lanes are ignored.  ``overhead`` is the technique's per-step cost
    (lanes pay it in parallel), ``voted`` adds one hierarchy decision.
    """
    active = warp.active_count
    if active == 0:
        return
    approx_mask = ballot(warp, approx_flags)
    n_approx = popcount(approx_mask)
    step = model.cost_approx if n_approx == active else model.cost_accurate
    step += float(overhead)
    if voted:
        step += model.cost_decision
    stats.work += step
    stats.total_warp_steps += 1
    stats.total_invocations += active
    stats.approx_invocations += n_approx
    if 0 < n_approx < active:
        stats.divergent_warp_steps += 1


class TeamContext:
    """One team at one grid-stride step, as seen by the kernel body.

    ``items[j]`` is the work index assigned to lane ``j`` (-1 when the lane has
    no work at this step); ``active`` is the matching boolean mask.
    """

    def __init__(self, grid: GridConfig, team_id: int, step_index: int, items: np.ndarray,
                 arena: SharedArena, stats: StatsAccumulator, model: CostModel):
        self.grid = grid
        self.team_id = team_id
        self.step_index = step_index
        self.items = items
        self.active = items >= 0
        self.arena = arena
        self.stats = stats
        self.model = model
        base = team_id * grid.threads_per_team
        self.thread_ids = np.arange(base, base + grid.threads_per_team)
        ws = grid.warp_size
        self.warps = [
            WarpContext(
                warp_id=team_id * grid.warps_per_team + w,
                team_id=team_id,
                lane_offset=w * ws,
                lane_count=ws,
                active_mask=mask_from_bools(self.active[w * ws:(w + 1) * ws]),
                step_index=step_index,
            )
            for w in range(grid.warps_per_team)
        ]

    @property
    def active_count(self) -> int:
        return int(self.active.sum())

    def barrier(self, arrived) -> None:
        """Team barrier.  Every lane holding work must arrive, or the launch aborts."""
        team_barrier(self, arrived)

    def charge(self, warp: WarpContext, approx_flags, overhead: float = 0.0,
               voted: bool = False) -> None:
        accumulate_cost(self.stats, warp, approx_flags, self.model, overhead, voted)

    def charge_accurate(self) -> None:
        """Charge a plain (unapproximated) invocation for every warp of the team."""
        for w in self.warps:
            accumulate_cost(self.stats, w, np.zeros(w.lane_count, bool), self.model)


def team_barrier(team: TeamContext, arrived) -> None:
    arrived = np.asarray(arrived, dtype=bool)
    missing = np.flatnonzero(team.active & ~arrived)
    if missing.size:
        team.stats.barrier_divergence_detected = True
        raise BarrierDivergence(team.team_id, team.step_index,
                                [int(t) for t in team.thread_ids[missing]])


def grid_stride_items(grid: GridConfig, n: int, step: int, team: int) -> np.ndarray:
    g = grid.total_threads
    tids = np.arange(team * grid.threads_per_team, (team + 1) * grid.threads_per_team)
    idx = tids + step * g
    return np.where(idx < n, idx, -1)


def launch_kernel(grid: GridConfig, body, n: int, model: CostModel | None = None,
                  shared: list[tuple[str, int]] | None = None) -> KernelStats:
    """Run ``body`` over items ``0..n-1`` with a grid-stride schedule.

    ``body(team)`` is called once per (step, team) pair that has work.  Shared
    memory requests are ``(tag, bytes_per_team)``; they may also come from a
    ``shared_requirements(grid)`` method on the body.  A body may expose
    ``begin(grid)`` to reset per-launch state.
    """
    model = model or CostModel()
    if n < 0:
        raise ValueError("problem size must be non-negative")
    if n > grid.capacity:
        raise ValueError(
            f"grid covers {grid.capacity} items "
            f"({grid.num_teams}x{grid.threads_per_team}x{grid.items_per_thread}), n={n}"
        )
    requests = list(shared or [])
    if hasattr(body, "shared_requirements"):
        requests += list(body.shared_requirements(grid))
    total = arena_bytes(requests)
    if total > grid.shared_mem_budget_bytes:
        raise SharedArenaOverflow(total, grid.shared_mem_budget_bytes,
                                  ", ".join(t for t, _ in requests))
    if hasattr(body, "begin"):
        body.begin(grid)

    stats = StatsAccumulator()
    arenas = []
    for _ in range(grid.num_teams):
        arena = SharedArena(grid.shared_mem_budget_bytes)
        for tag, nbytes in requests:
            arena.alloc(nbytes, tag)
        arenas.append(arena)

    g = grid.total_threads
    launched_warps = -(-min(n, g) // grid.warp_size)
    steps = -(-n // g) if n else 0
    try:
        for step in range(steps):
            first = step * g
            for team in range(grid.num_teams):
                if first + team * grid.threads_per_team >= n:
                    break
                items = grid_stride_items(grid, n, step, team)
                body(TeamContext(grid, team, step, items, arenas[team], stats, model))
    except BarrierDivergence as exc:
        exc.stats = stats.freeze(model, launched_warps)
        raise
    return stats.freeze(model, launched_warps)


def schedule(grid: GridConfig, n: int) -> dict[int, list[int]]:
    """Map thread id to the work indices it visits, in visiting order."""
    out: dict[int, list[int]] = {}
    g = grid.total_threads
    for t in range(min(g, n)):
        out[t] = list(range(t, n, g))
    return out


__all__ = [
    "Allocation", "BarrierDivergence", "CostModel", "GridConfig", "KernelAborted",
    "KernelStats", "SharedArena", "SharedArenaOverflow", "SimtFault", "StatsAccumulator",
    "TeamContext", "WarpContext", "accumulate_cost", "atomic_add_shared", "ballot",
    "launch_kernel", "mask_from_bools", "popcount", "schedule", "team_barrier",
]
