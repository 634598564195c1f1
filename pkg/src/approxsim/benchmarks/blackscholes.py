"""Blackscholes: closed-form pricing of a European option portfolio.

The approximated region is the whole price calculation of one option; the
QoI is the vector of kernel prices.
"""

from __future__ import annotations

import numpy as np

from ..region import run_map
from .base import Benchmark, BenchResult
from .options import N_FIELDS, black_scholes, make_portfolio


def blackscholes_kernel(options) -> np.ndarray:
    return black_scholes(options)


class Blackscholes(Benchmark):
    id = "blackscholes"
    threads_per_team = 128
    default_items_per_thread = 10
    input_dims = N_FIELDS

    def __init__(self, seed: int = 0, model=None, n_options: int = 10240,
                 n_unique: int = 16, jitter: float = 0.005):
        super().__init__(seed, model)
        self.options = make_portfolio(n_options, n_unique, jitter, seed)
        self.prices = blackscholes_kernel(self.options)

    @property
    def n_items(self) -> int:
        return len(self.options)

    def run(self, spec, grid=None) -> BenchResult:
        spec = self.bind(spec)
        grid = grid or self.grid()
        r = run_map(spec, lambda idx: self.prices[idx], self.n_items, grid, self.model,
                    inputs=self.options)
        return BenchResult(r.out, r.stats, r.approx_rate)
