"""Binomial Options: American options priced on a CRR lattice.

One team prices one option at a time, so the item handled by lane ``l`` of
the team at a grid-stride step is ``option * threads_per_team + l`` and the
items-per-thread knob is the number of options each team walks through.  The
lanes cooperate on the lattice, which needs a team barrier on the accurate
path; only team-level activation keeps such a kernel deadlock free.
"""

from __future__ import annotations

import numpy as np

from ..hierarchy import HierarchyLevel
from ..region import run_map
from ..simt import CostModel
from .base import Benchmark, BenchResult
from .options import N_FIELDS, binomial_price, make_portfolio


def binomial_options_kernel(options, n_steps: int, american: bool = True) -> np.ndarray:
    return binomial_price(options, n_steps, american)


class BinomialOptions(Benchmark):
    id = "binomial"
    threads_per_team = 64
    default_items_per_thread = 1
    input_dims = N_FIELDS
    preferred_level = HierarchyLevel.TEAM

    def __init__(self, seed: int = 0, model=None, n_options: int = 8192, n_steps: int = 64,
                 n_unique: int = 16, jitter: float = 0.005, american: bool = True):
        super().__init__(seed, model)
        self.options = make_portfolio(n_options, n_unique, jitter, seed)
        self.n_steps = n_steps
        self.prices = binomial_options_kernel(self.options, n_steps, american)

    def default_model(self) -> CostModel:
        # below 128 warps in flight the lattice latency is no longer hidden
        return CostModel(resident_warps=128)

    @property
    def n_options(self) -> int:
        return len(self.options)

    @property
    def n_items(self) -> int:
        return self.n_options * self.threads_per_team

    def run(self, spec, grid=None) -> BenchResult:
        spec = self.bind(spec)
        grid = grid or self.grid()
        if grid.threads_per_team != self.threads_per_team:
            raise ValueError(f"binomial kernel runs {self.threads_per_team} threads per team")
        tpt = self.threads_per_team
        inputs = np.repeat(self.options, tpt, axis=0)
        r = run_map(spec, lambda idx: self.prices[idx // tpt], self.n_items, grid, self.model,
                    inputs=inputs, has_barrier=True)
        return BenchResult(r.out[::tpt].copy(), r.stats, r.approx_rate)
