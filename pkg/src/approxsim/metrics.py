"""Quality-loss and efficiency metrics, trial records and interval reports.

Errors are fractions everywhere inside the package (0.01 is one percent);
conversion to percent happens only when text is rendered for people.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np


def mape(acc, app) -> float:
    """Mean absolute percent error as a fraction.

    A term with a zero accurate value contributes 0 when the approximate value
    is also 0, and makes the whole result ``inf`` otherwise.
    """
    acc = np.asarray(acc, dtype=float).ravel()
    app = np.asarray(app, dtype=float).ravel()
    if acc.shape != app.shape:
        raise ValueError(f"length mismatch: {acc.size} vs {app.size}")
    if acc.size == 0:
        return 0.0
    diff = np.abs(acc - app)
    zero = acc == 0
    if np.any(zero & (diff != 0)):
        return math.inf
    terms = np.zeros_like(acc)
    nz = ~zero
    terms[nz] = diff[nz] / np.abs(acc[nz])
    return float(math.fsum(terms) / acc.size)


def mcr(acc, app) -> float:
    """Misclassification rate: fraction of positions whose labels differ."""
    acc = np.asarray(acc).ravel()
    app = np.asarray(app).ravel()
    if acc.shape != app.shape:
        raise ValueError(f"length mismatch: {acc.size} vs {app.size}")
    if acc.size == 0:
        return 0.0
    return int(np.count_nonzero(acc != app)) / acc.size


ERROR_METRICS = {"mape": mape, "mcr": mcr}


def footprint_per_thread_tables(num_threads: int, entries: int, entry_bytes: int,
                                device_bytes: int) -> float:
    """Percent of device memory taken by one private memo table per thread."""
    if device_bytes <= 0:
        raise ValueError("device_bytes must be positive")
    if min(num_threads, entries, entry_bytes) < 0:
        raise ValueError("counts must be non-negative")
    return float(Fraction(100 * num_threads * entries * entry_bytes, device_bytes))


def convergence_speedup(n_baseline_iters: int, n_approx_iters: int) -> float:
    if n_baseline_iters < 1 or n_approx_iters < 1:
        raise ValueError("iteration counts must be >= 1")
    return n_baseline_iters / n_approx_iters


@dataclass
class TrialRecord:
    benchmark: str
    technique: str
    directive: str = ""
    level: str = "thread"
    h_size: int | None = None
    p_size: int | None = None
    threshold: float | None = None
    table_size: int | None = None
    tables_per_warp: int | None = None
    perfo_kind: str | None = None
    perfo_arg: int | None = None
    num_teams: int = 0
    threads_per_team: int = 0
    items_per_thread: int = 0
    error_metric: str = "mape"
    error_value: float = math.nan
    approx_rate: float = 0.0
    divergent_fraction: float = 0.0
    baseline_cost: float = 0.0
    approx_cost: float = 0.0
    est_speedup: float = math.nan
    baseline_iterations: int | None = None
    iterations: int | None = None
    trials: int = 1
    trial: int = 0
    seed: int = 0
    status: str = "OK"
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "OK"

    @property
    def convergence_speedup(self) -> float | None:
        if not self.baseline_iterations or not self.iterations:
            return None
        return convergence_speedup(self.baseline_iterations, self.iterations)

    def param_key(self) -> tuple:
        return (self.benchmark, self.technique, self.directive, self.threads_per_team,
                self.items_per_thread, self.num_teams, self.seed, self.trial)

    def to_row(self) -> list[str]:
        return [_fmt(getattr(self, f.name)) for f in fields(self)]

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "TrialRecord":
        kw = {}
        for f in fields(cls):
            raw = row.get(f.name, "")
            kw[f.name] = _parse(raw, f.type)
        return cls(**kw)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _parse(raw: str, typ: str):
    if raw == "" and "None" in typ:
        return None
    if typ.startswith("int"):
        return int(raw)
    if typ.startswith("float"):
        return float(raw)
    return raw


@dataclass
class Interval:
    lo: float
    hi: float
    count: int
    fastest: list[TrialRecord]
    slowest: list[TrialRecord]


def _speed_order(records):
    # slowest first; ties broken by the parameter tuple
    return sorted(records, key=lambda r: (r.est_speedup, r.param_key()))


def error_interval_report(records, n_bins: int = 10) -> list[Interval]:
    """Split the error range into equal-width bins; keep each bin's speed deciles."""
    recs = [r for r in records if r.ok and math.isfinite(r.error_value)]
    if not recs:
        return []
    lo = min(r.error_value for r in recs)
    hi = max(r.error_value for r in recs)
    width = (hi - lo) / n_bins
    bins: list[list[TrialRecord]] = [[] for _ in range(n_bins)]
    for r in recs:
        k = 0 if width == 0 else min(n_bins - 1, int((r.error_value - lo) / width))
        bins[k].append(r)
    out = []
    for k, members in enumerate(bins):
        b_lo = lo + k * width
        b_hi = hi if k == n_bins - 1 else lo + (k + 1) * width
        if not members:
            out.append(Interval(b_lo, b_hi, 0, [], []))
            continue
        d = max(1, math.ceil(len(members) / 10))
        order = _speed_order(members)
        out.append(Interval(b_lo, b_hi, len(members), order[::-1][:d], order[:d]))
    return out


def best_under(records, max_error: float) -> TrialRecord | None:
    """Fastest record whose error is below ``max_error`` (zero error always qualifies)."""
    ok = [r for r in records
          if r.ok and (r.error_value < max_error or r.error_value == 0)]
    if not ok:
        return None
    return sorted(ok, key=lambda r: (-r.est_speedup, r.param_key()))[0]


def record_dict(r: TrialRecord) -> dict:
    return asdict(r)
