"""Synthetic element-wise kernel with controlled temporal locality."""

from __future__ import annotations

import enum

import numpy as np

from ..region import run_map
from .base import Benchmark, BenchResult


class Profile(enum.Enum):
    CONSTANT = "constant"
    SLOW_DRIFT = "slow_drift"
    NOISE = "noise"


def synthetic_kernel(profile: Profile | str, n: int, seed: int = 0) -> np.ndarray:
    """CONSTANT: one value; SLOW_DRIFT: a gentle ramp; NOISE: seeded high-RSD values."""
    if n < 1:
        raise ValueError("n must be >= 1")
    profile = Profile(profile)
    i = np.arange(n, dtype=float)
    if profile is Profile.CONSTANT:
        return np.full(n, 7.0)
    if profile is Profile.SLOW_DRIFT:
        return 10.0 + 1e-3 * i
    rng = np.random.default_rng(seed)
    return rng.uniform(1.0, 100.0, n)


class Synthetic(Benchmark):
    id = "synthetic"
    threads_per_team = 32
    default_items_per_thread = 8

    def __init__(self, seed: int = 0, model=None, profile: Profile | str = Profile.CONSTANT,
                 n: int = 4096, barrier: bool = False):
        super().__init__(seed, model)
        # the accurate path synchronises the team, as a cooperative kernel would
        self.barrier = barrier
        self.profile = Profile(profile)
        self.values = synthetic_kernel(self.profile, n, seed)

    @property
    def n_items(self) -> int:
        return len(self.values)

    def run(self, spec, grid=None) -> BenchResult:
        spec = self.bind(spec)
        grid = grid or self.grid()
        r = run_map(spec, lambda idx: self.values[idx], self.n_items, grid, self.model,
                    inputs=self.values[:, None], has_barrier=self.barrier)
        return BenchResult(r.out, r.stats, r.approx_rate)
