from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..directives import ApproxSpec, Technique
from ..simt import CostModel, GridConfig, KernelStats


@dataclass
class BenchResult:
    qoi: np.ndarray
    stats: KernelStats
    approx_rate: float
    iterations: int | None = None
    converged: bool = True
    host_cost: float = 0.0

    @property
    def total_cost(self) -> float:
        return self.stats.estimated_cost + self.host_cost


class Benchmark:
    """A kernel with a quantity of interest and an error metric.

    Subclasses set the class attributes and implement :meth:`run`.
    """

    id = "base"
    error_metric = "mape"
    stochastic = False
    threads_per_team = 32
    default_items_per_thread = 1
    input_dims = 1
    output_dims = 1

    def __init__(self, seed: int = 0, model: CostModel | None = None):
        self.seed = seed
        self.model = model or self.default_model()

    def default_model(self) -> CostModel:
        return CostModel()

    @property
    def n_items(self) -> int:
        raise NotImplementedError

    def grid(self, items_per_thread: int | None = None, num_teams: int | None = None,
             threads_per_team: int | None = None) -> GridConfig:
        tpt = threads_per_team or self.threads_per_team
        if num_teams is not None:
            ipt = max(1, -(-self.n_items // (num_teams * tpt)))
            return GridConfig(num_teams, tpt, items_per_thread=ipt)
        ipt = items_per_thread or self.default_items_per_thread
        return GridConfig.for_items(self.n_items, tpt, ipt)

    def bind(self, spec: ApproxSpec | None) -> ApproxSpec | None:
        """Check a spec against this benchmark's region signature."""
        if spec is None or spec.technique is not Technique.IACT:
            return spec
        c = spec.iact
        if (c.input_dims, c.output_dims) != (self.input_dims, self.output_dims):
            raise ValueError(
                f"{self.id} region takes {self.input_dims} inputs and {self.output_dims} "
                f"outputs; directive declares {c.input_dims} and {c.output_dims}"
            )
        return spec

    def make_iact(self, table_size: int, threshold: float, tables_per_warp: int = 32, level=None):
        kw = {} if level is None else {"level": level}
        return ApproxSpec.make_iact(table_size, threshold, tables_per_warp,
                                    input_dims=self.input_dims, output_dims=self.output_dims, **kw)

    def run(self, spec: ApproxSpec | None, grid: GridConfig | None = None) -> BenchResult:
        raise NotImplementedError

    def with_model(self, **changes) -> "Benchmark":
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.model = dataclasses.replace(self.model, **changes)
        return out
