"""Desk-scale benchmark kernels."""

from .base import Benchmark, BenchResult
from .binomial import BinomialOptions, binomial_options_kernel
from .blackscholes import Blackscholes, blackscholes_kernel
from .kmeans import KMeans, kmeans_benchmark, kmeans_pp, make_blobs
from .synthetic import Profile, Synthetic, synthetic_kernel

BENCHMARKS = {
    "blackscholes": Blackscholes,
    "binomial": BinomialOptions,
    "kmeans": KMeans,
    "synthetic": Synthetic,
}


def get_benchmark(name: str, seed: int = 0, **params) -> Benchmark:
    try:
        cls = BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None
    return cls(seed=seed, **params)
