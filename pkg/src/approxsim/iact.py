"""Input memoization (iACT) with tables shared inside a warp.

Lanes are split into ``tables_per_warp`` contiguous groups, each group sharing
one :class:`MemoTable`.  An invocation is a read phase (every lane looks up its
table), a warp barrier, accurate evaluation of the misses, and a write phase
in which each table accepts at most one new entry: the miss whose input lies
farthest from everything already cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .simt import WarpContext

SIZEOF_REAL = 8
TABLE_HEADER_BYTES = 8  # round-robin cursor + occupancy, 4 bytes each


@dataclass(frozen=True)
class IactConfig:
    table_size: int
    threshold: float
    tables_per_warp: int = 32
    input_dims: int = 1
    output_dims: int = 1

    def __post_init__(self):
        if self.table_size < 1:
            raise ValueError(f"table_size must be >= 1, got {self.table_size}")
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if self.tables_per_warp < 1:
            raise ValueError("tables_per_warp must be >= 1")
        if self.input_dims < 1 or self.output_dims < 1:
            raise ValueError("input_dims and output_dims must be >= 1")

    def lanes_per_table(self, warp_size: int) -> int:
        if warp_size % self.tables_per_warp:
            raise ValueError(
                f"tables_per_warp={self.tables_per_warp} does not divide warp size {warp_size}"
            )
        return warp_size // self.tables_per_warp

    def table_of_lane(self, lane: int, warp_size: int) -> int:
        return lane // self.lanes_per_table(warp_size)


def table_group_bytes(cfg: IactConfig) -> int:
    """Shared memory needed by the tables of one warp."""
    entry = (cfg.input_dims + cfg.output_dims) * SIZEOF_REAL
    return cfg.tables_per_warp * (cfg.table_size * entry + TABLE_HEADER_BYTES)


class MemoTable:
    def __init__(self, table_size: int, input_dims: int, output_dims: int):
        self.table_size = table_size
        self.inputs = np.zeros((table_size, input_dims))
        self.outputs = np.zeros((table_size, output_dims))
        self.occupancy = 0
        self.rr_cursor = 0
        self.write_log: list[int] = []

    @classmethod
    def for_config(cls, cfg: IactConfig) -> "MemoTable":
        return cls(cfg.table_size, cfg.input_dims, cfg.output_dims)

    def insert(self, inp, out) -> int:
        slot = self.rr_cursor
        self.inputs[slot] = inp
        self.outputs[slot] = out
        self.rr_cursor = (slot + 1) % self.table_size
        self.occupancy = min(self.occupancy + 1, self.table_size)
        self.write_log.append(slot)
        return slot

    def distances(self, x) -> np.ndarray:
        """L2 distance from ``x`` to every occupied slot, in slot order."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.inputs.shape[1:]:
            raise ValueError(f"input of shape {x.shape}, table holds {self.inputs.shape[1:]}")
        return _l2(self.inputs[:self.occupancy], x)


def _l2(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = rows - x
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def euclid_dist(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(_l2(a.reshape(1, -1), b.reshape(-1))[0])


def nearest(table: MemoTable, x) -> tuple[int, float]:
    """Slot and distance of the closest entry; ``(-1, inf)`` for an empty table."""
    if table.occupancy == 0:
        return -1, math.inf
    d = table.distances(x)
    slot = int(np.argmin(d))  # first minimum, i.e. lowest slot on ties
    return slot, float(d[slot])


def lookup(table: MemoTable, x, threshold: float):
    """Cached output of the nearest entry within ``threshold``, else None."""
    slot, dist = nearest(table, x)
    if slot < 0 or dist > threshold:
        return None
    return table.outputs[slot].copy()


def select_writer(candidates, table: MemoTable) -> int:
    """Pick the miss lane whose input is farthest from its nearest table entry.

    ``candidates`` is an iterable of ``(lane, input)``; ties go to the lowest lane.
    """
    best_lane, best_d = None, -1.0
    for lane, x in sorted(candidates, key=lambda c: c[0]):
        _, d = nearest(table, x)
        if d > best_d:
            best_lane, best_d = lane, d
    if best_lane is None:
        raise ValueError("select_writer needs at least one miss lane")
    return best_lane


@dataclass
class ReadResult:
    hit: np.ndarray                 # bool per lane
    cached: np.ndarray              # nearest cached output per lane (NaN if none)
    has_entry: np.ndarray           # lane's table was nonempty
    table: np.ndarray               # table index per lane


@dataclass
class PhaseTrace:
    hits: list[int] = field(default_factory=list)
    misses: list[int] = field(default_factory=list)
    writes: list[tuple[int, int, int]] = field(default_factory=list)  # (table, lane, slot)


def read_phase(warp: WarpContext, cfg: IactConfig, tables: list[MemoTable],
               inputs: np.ndarray) -> ReadResult:
    ws = warp.lane_count
    hit = np.zeros(ws, bool)
    has_entry = np.zeros(ws, bool)
    cached = np.full((ws, cfg.output_dims), np.nan)
    tix = np.array([cfg.table_of_lane(l, ws) for l in range(ws)])
    for lane in warp.active_lanes():
        t = tables[tix[lane]]
        slot, d = nearest(t, inputs[lane])
        if slot >= 0:
            has_entry[lane] = True
            cached[lane] = t.outputs[slot]
            hit[lane] = d <= cfg.threshold
    return ReadResult(hit, cached, has_entry, tix)


def write_phase(warp: WarpContext, cfg: IactConfig, tables: list[MemoTable],
                inputs: np.ndarray, outputs: np.ndarray, writers_from) -> list[tuple[int, int, int]]:
    """Insert at most one entry per table from the lanes flagged in ``writers_from``."""
    ws = warp.lane_count
    per = cfg.lanes_per_table(ws)
    writes = []
    for t, table in enumerate(tables):
        cands = [(l, inputs[l]) for l in range(t * per, (t + 1) * per)
                 if warp.is_active(l) and writers_from[l]]
        if not cands:
            continue
        lane = select_writer(cands, table)
        slot = table.insert(inputs[lane], outputs[lane])
        writes.append((t, lane, slot))
    return writes


def warp_memo_phase(warp: WarpContext, cfg: IactConfig, tables: list[MemoTable],
                    inputs, evaluate):
    """One thread-level iACT invocation for a warp.

    ``evaluate(lanes)`` returns accurate outputs (one row per lane listed).
    Returns ``(outputs, approx_flags, trace)``.
    """
    inputs = np.asarray(inputs, dtype=float).reshape(warp.lane_count, cfg.input_dims)
    r = read_phase(warp, cfg, tables, inputs)
    # warp barrier: all reads complete before any table is written
    active = np.array([warp.is_active(l) for l in range(warp.lane_count)])
    miss = active & ~r.hit
    outputs = np.full((warp.lane_count, cfg.output_dims), np.nan)
    outputs[r.hit] = r.cached[r.hit]
    lanes = np.flatnonzero(miss)
    if lanes.size:
        outputs[lanes] = np.asarray(evaluate(lanes), dtype=float).reshape(lanes.size, -1)
    trace = PhaseTrace(hits=[int(l) for l in np.flatnonzero(r.hit)],
                       misses=[int(l) for l in lanes])
    trace.writes = write_phase(warp, cfg, tables, inputs, outputs, miss)
    return outputs, r.hit.copy(), trace
