"""K-Means (Lloyd iterations) with the distance kernel as the approximable region.

Each iteration is one kernel launch that computes, per observation, the
distances to the current centroids; the host then assigns clusters and moves
the centroids.  The run converges when no observation changes cluster.
Initial centroids come from seeded k-means++ sampling.
"""

from __future__ import annotations

import numpy as np

from ..region import run_map
from ..simt import KernelStats
from .base import Benchmark, BenchResult


def make_blobs(n: int, k: int, dims: int = 2, separation: float = 6.0, seed: int = 0) -> np.ndarray:
    """Gaussian blobs with unit spread, centres on a circle of radius ``separation``.

    Points are stored blob by blob, as they would be after reading a file
    grouped by source.
    """
    rng = np.random.default_rng(seed)
    ang = 2 * np.pi * np.arange(k) / k
    centres = np.zeros((k, dims))
    centres[:, 0] = separation * np.cos(ang)
    if dims > 1:
        centres[:, 1] = separation * np.sin(ang)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    return np.concatenate([c + rng.standard_normal((m, dims)) for c, m in zip(centres, sizes)])


def distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = points[:, None, :] - centroids[None, :, :]
    return np.sqrt(np.einsum("nkd,nkd->nk", d, d))


def kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new centre drawn with probability proportional to D^2."""
    centres = [points[rng.integers(len(points))]]
    for _ in range(1, k):
        d2 = np.min(((points[:, None, :] - np.asarray(centres)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        idx = rng.integers(len(points)) if total == 0 else rng.choice(len(points), p=d2 / total)
        centres.append(points[idx])
    return np.array(centres)


def update_centroids(points, labels, centroids) -> np.ndarray:
    new = centroids.copy()
    for c in range(len(centroids)):
        members = labels == c
        if members.any():  # an empty cluster keeps its previous centroid
            new[c] = points[members].mean(axis=0)
    return new


def kmeans_benchmark(points, k: int, max_iters: int, spec=None, grid=None, model=None,
                     init=None):
    """Lloyd iterations with each distance pass launched on the simulator.

    Returns ``(assignments, iterations_used, converged, stats)``.
    """
    points = np.asarray(points, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(points) == 0:
        raise ValueError("no observations")
    n, dims = points.shape
    centroids = points[:k].copy() if init is None else np.asarray(init, dtype=float).copy()
    if grid is None:
        from ..simt import GridConfig
        grid = GridConfig.for_items(n, 64, 8)
    labels = None
    stats = KernelStats()
    for it in range(1, max_iters + 1):
        cur = centroids
        r = run_map(spec, lambda idx: distances(points[idx], cur), n, grid, model,
                    inputs=points, out_dims=k)
        stats = stats + r.stats
        new_labels = np.argmin(r.out, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            return new_labels, it, True, stats
        labels = new_labels
        centroids = update_centroids(points, labels, centroids)
    return labels, max_iters, False, stats


class KMeans(Benchmark):
    id = "kmeans"
    error_metric = "mcr"
    stochastic = True
    threads_per_team = 64
    default_items_per_thread = 8
    input_dims = 2
    output_dims = 4

    def __init__(self, seed: int = 0, model=None, n_points: int = 1024, k: int = 4,
                 separation: float = 2.5, max_iters: int = 50,
                 host_cost_per_iteration: float = 900.0):
        super().__init__(seed, model)
        self.k = k
        self.output_dims = k
        self.max_iters = max_iters
        # assignment and centroid update run outside the kernel, never approximated
        self.host_cost_per_iteration = host_cost_per_iteration
        self.points = make_blobs(n_points, k, self.input_dims, separation, seed)
        self.init = kmeans_pp(self.points, k, np.random.default_rng(seed + 1))

    @property
    def n_items(self) -> int:
        return len(self.points)

    def run(self, spec, grid=None) -> BenchResult:
        spec = self.bind(spec)
        grid = grid or self.grid()
        labels, iters, conv, stats = kmeans_benchmark(self.points, self.k, self.max_iters, spec,
                                                      grid, self.model, self.init)
        return BenchResult(labels, stats, stats.approx_rate, iters, conv,
                           host_cost=iters * self.host_cost_per_iteration)
