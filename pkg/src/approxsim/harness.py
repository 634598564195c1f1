"""Exploration harness: single trials, Cartesian sweeps and reports.

A sweep point is a canonical directive string plus a grid knob and a trial
number.  Records are written as CSV in a fixed column order, sorted by
:meth:`TrialRecord.param_key`, so the file is a pure function of the config.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

from .benchmarks import BENCHMARKS, get_benchmark
from .directives import ApproxSpec, Technique, parse_directive, unparse
from .hierarchy import HierarchyLevel
from .metrics import ERROR_METRICS, TrialRecord, best_under, error_interval_report
from .perfo import PerfoKind
from .simt import KernelAborted, SimtFault

GRID_H_SIZES = [1, 2, 3, 4, 5]
GRID_P_SIZES = [2, 4, 8, 16, 32, 64, 128, 256, 512]
GRID_TAF_THRESHOLDS = [0.3, 0.6, 0.9, 1.2, 1.5, 3.0, 5.0, 20.0]
GRID_IACT_THRESHOLDS = [0.1, 0.3, 0.5, 0.7, 0.9, 3.0, 5.0, 20.0]
GRID_TABLE_SIZES = [1, 2, 4, 8]
GRID_TABLES_PER_WARP = [1, 2, 16, 32]
GRID_ITEMS_PER_THREAD = [8, 16, 32, 64, 128, 256, 512]


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    benchmark: str
    technique: str = "taf"
    h_size: list = field(default_factory=list)
    p_size: list = field(default_factory=list)
    thresholds: list = field(default_factory=list)
    t_size: list = field(default_factory=list)
    tables_per_warp: list = field(default_factory=list)
    perfo_kinds: list = field(default_factory=list)
    perfo_moduli: list = field(default_factory=list)
    perfo_percents: list = field(default_factory=list)
    levels: list = field(default_factory=lambda: ["thread"])
    items_per_thread: list = field(default_factory=list)
    num_teams: list = field(default_factory=list)
    directives: list = field(default_factory=list)
    trials: int = 1
    seed: int = 0
    out: str | None = None
    benchmark_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}")
        if self.technique not in ("taf", "iact", "perfo", "none"):
            raise ConfigError(f"unknown technique {self.technique!r}")
        if self.items_per_thread and self.num_teams:
            raise ConfigError("give items_per_thread or num_teams, not both")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        for v in self.items_per_thread + self.num_teams:
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"grid values must be positive integers, got {v!r}")
        for lv in self.levels:
            HierarchyLevel.parse(lv)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "benchmark" not in d:
            raise ConfigError("config needs a 'benchmark'")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path: str) -> "SweepConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def effective_trials(self) -> int:
        return self.trials if BENCHMARKS[self.benchmark].stochastic else 1

    def specs(self) -> list[ApproxSpec | None]:
        bench_cls = BENCHMARKS[self.benchmark]
        if self.directives:
            return [parse_directive(d) for d in self.directives]
        levels = [HierarchyLevel.parse(lv) for lv in self.levels]
        out: list[ApproxSpec | None] = []
        if self.technique == "none":
            return [None]
        if self.technique == "taf":
            for h, p, thr, lv in itertools.product(self.h_size, self.p_size, self.thresholds, levels):
                out.append(ApproxSpec.make_taf(h, p, float(thr), level=lv))
        elif self.technique == "iact":
            for ts, thr, tpw, lv in itertools.product(self.t_size, self.thresholds,
                                                      self.tables_per_warp, levels):
                out.append(ApproxSpec.make_iact(ts, float(thr), tpw, level=lv,
                                                input_dims=bench_cls.input_dims,
                                                output_dims=_output_dims(self)))
        else:
            for kind, lv in itertools.product(self.perfo_kinds, levels):
                k = PerfoKind(kind)
                args = self.perfo_moduli if k.is_modulus else self.perfo_percents
                out.extend(ApproxSpec.make_perfo(k, a, level=lv) for a in args)
        return out

    def points(self) -> list["Point"]:
        grids = ([("ipt", v) for v in self.items_per_thread]
                 + [("teams", v) for v in self.num_teams]) or [("default", 0)]
        pts = {}
        for spec, (gk, gv), trial in itertools.product(self.specs(), grids,
                                                       range(self.effective_trials)):
            text = "" if spec is None else unparse(spec)
            pt = Point(text, gk, gv, trial)
            pts.setdefault(pt.key(), pt)
        return list(pts.values())


def _output_dims(cfg: SweepConfig) -> int:
    cls = BENCHMARKS[cfg.benchmark]
    k = cfg.benchmark_params.get("k")
    return k if (cfg.benchmark == "kmeans" and k) else cls.output_dims


@dataclass(frozen=True)
class Point:
    directive: str
    grid_kind: str
    grid_value: int
    trial: int

    def key(self) -> str:
        return f"{self.directive}|{self.grid_kind}={self.grid_value}|t{self.trial}"


# -- single trial ----------------------------------------------------------------

_BASELINES: dict = {}


def _bench(name: str, seed: int, params: dict):
    return get_benchmark(name, seed=seed, **params)


def _baseline(name: str, seed: int, params: dict):
    key = (name, seed, json.dumps(params, sort_keys=True))
    if key not in _BASELINES:
        bench = _bench(name, seed, params)
        _BASELINES[key] = (bench, bench.run(None))
    return _BASELINES[key]


def _grid_for(bench, grid_kind: str, grid_value: int):
    if grid_kind == "ipt":
        return bench.grid(items_per_thread=grid_value)
    if grid_kind == "teams":
        return bench.grid(num_teams=grid_value)
    return bench.grid()


def run_trial(benchmark: str, spec: ApproxSpec | str | None, *, seed: int = 0, trial: int = 0,
              items_per_thread: int | None = None, num_teams: int | None = None,
              trials: int = 1, benchmark_params: dict | None = None) -> TrialRecord:
    """Run the baseline and one approximated configuration; return the record.

    Simulator aborts become a FAILED record rather than an exception.
    """
    params = dict(benchmark_params or {})
    if isinstance(spec, str):
        spec = parse_directive(spec) if spec.strip() else None
    bench_seed = seed + trial
    bench, base = _baseline(benchmark, bench_seed, params)
    if items_per_thread is not None and num_teams is not None:
        raise ConfigError("give items_per_thread or num_teams, not both")
    gk, gv = ("ipt", items_per_thread) if items_per_thread else (
        ("teams", num_teams) if num_teams else ("default", 0))
    grid = _grid_for(bench, gk, gv)
    rec = _blank_record(bench, spec, grid, trials, trial, bench_seed)
    rec.baseline_cost = base.total_cost
    rec.baseline_iterations = base.iterations
    try:
        res = bench.run(spec, grid)
    except KernelAborted as e:
        rec.status, rec.reason = "FAILED", f"{type(e).__name__}: {e}"
        if e.stats is not None:
            rec.divergent_fraction = e.stats.divergent_fraction
        return rec
    except SimtFault as e:
        rec.status, rec.reason = "FAILED", f"{type(e).__name__}: {e}"
        return rec
    rec.error_value = float(ERROR_METRICS[bench.error_metric](base.qoi, res.qoi))
    rec.approx_rate = float(res.approx_rate)
    rec.divergent_fraction = float(res.stats.divergent_fraction)
    rec.approx_cost = float(res.total_cost)
    rec.est_speedup = rec.baseline_cost / rec.approx_cost if rec.approx_cost else math.inf
    rec.iterations = res.iterations
    if res.iterations is not None and not res.converged:
        rec.reason = "not converged"
    return rec


def _blank_record(bench, spec, grid, trials, trial, seed) -> TrialRecord:
    rec = TrialRecord(benchmark=bench.id, technique="none" if spec is None else spec.technique.value,
                      directive="" if spec is None else unparse(spec),
                      level="thread" if spec is None else spec.level.value,
                      num_teams=grid.num_teams, threads_per_team=grid.threads_per_team,
                      items_per_thread=grid.items_per_thread, error_metric=bench.error_metric,
                      trials=trials, trial=trial, seed=seed)
    if spec is None:
        return rec
    if spec.technique is Technique.TAF:
        rec.h_size, rec.p_size, rec.threshold = spec.taf.h_size, spec.taf.p_size, spec.taf.threshold
    elif spec.technique is Technique.IACT:
        c = spec.iact
        rec.table_size, rec.tables_per_warp, rec.threshold = c.table_size, c.tables_per_warp, c.threshold
    else:
        rec.perfo_kind, rec.perfo_arg = spec.perfo.kind.value, spec.perfo.arg
    return rec


def _run_point(job) -> tuple[str, dict]:
    cfg_dict, point = job
    cfg = SweepConfig.from_dict(cfg_dict)
    kw = {}
    if point.grid_kind == "ipt":
        kw["items_per_thread"] = point.grid_value
    elif point.grid_kind == "teams":
        kw["num_teams"] = point.grid_value
    try:
        rec = run_trial(cfg.benchmark, point.directive, seed=cfg.seed, trial=point.trial,
                        trials=cfg.effective_trials, benchmark_params=cfg.benchmark_params, **kw)
    except ValueError as e:
        rec = TrialRecord(benchmark=cfg.benchmark, technique=cfg.technique,
                          directive=point.directive, trial=point.trial, seed=cfg.seed + point.trial,
                          trials=cfg.effective_trials, status="FAILED",
                          reason=f"{type(e).__name__}: {e}")
        if point.grid_kind == "ipt":
            rec.items_per_thread = point.grid_value
        elif point.grid_kind == "teams":
            rec.num_teams = point.grid_value
    return point.key(), asdict(rec)


# -- sweeps ----------------------------------------------------------------------

def _read_checkpoint(path: str) -> dict[str, dict]:
    done: dict[str, dict] = {}
    if not os.path.exists(path):
        return done
    with open(path) as fh:
        for line in fh:
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                break  # torn final line from an interrupted write
            done[entry["key"]] = entry["record"]
    return done


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TrialRecord.columns())
    for r in sorted(records, key=lambda r: r.param_key()):
        w.writerow(r.to_row())
    return buf.getvalue()


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def run_sweep(cfg: SweepConfig, out: str | None = None, jobs: int = 1,
              stop_after: int | None = None, log=None) -> list[TrialRecord] | None:
    """Run every point of ``cfg`` and write ``out`` (CSV) plus ``out + '.json'``.

    Finished points are appended to ``out + '.partial'`` as they complete, and
    a rerun skips them.  ``stop_after`` halts after that many new points
    without writing the final file (returns None).
    """
    out = out or cfg.out
    if not out:
        raise ConfigError("no output path given")
    points = cfg.points()
    if log:
        log(f"{len(points)} points")
    partial = f"{out}.partial"
    done = _read_checkpoint(partial)
    todo = [p for p in points if p.key() not in done]
    if stop_after is not None:
        todo = todo[:stop_after]
    cfg_dict = cfg.to_dict()
    jobs_iter = [(cfg_dict, p) for p in todo]
    with open(partial, "a") as ck:
        def record(key, rec):
            done[key] = rec
            ck.write(json.dumps({"key": key, "record": rec}, sort_keys=True) + "\n")
            ck.flush()
            os.fsync(ck.fileno())

        if jobs > 1 and len(jobs_iter) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                for key, rec in ex.map(_run_point, jobs_iter, chunksize=4):
                    record(key, rec)
        else:
            for job in jobs_iter:
                record(*_run_point(job))
    if stop_after is not None and len(done) < len(points):
        return None
    records = [TrialRecord(**done[p.key()]) for p in points]
    _atomic_write(out, records_csv(records))
    _atomic_write(f"{out}.json", json.dumps(cfg_dict, indent=2, sort_keys=True) + "\n")
    os.remove(partial)
    return sorted(records, key=lambda r: r.param_key())


def load_records(path: str) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        return [TrialRecord.from_row(row) for row in csv.DictReader(fh)]


# -- reports ---------------------------------------------------------------------

_BRIEF = ("directive", "level", "items_per_thread", "num_teams", "seed", "trial",
          "error_value", "approx_rate", "est_speedup")


def _brief(r: TrialRecord) -> dict:
    return {k: _json_num(getattr(r, k)) for k in _BRIEF}


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def build_report(records, max_error: float = 0.10) -> dict:
    """Per benchmark and technique: best under the bound, error intervals, ipt table."""
    groups = {}
    for r in records:
        groups.setdefault((r.benchmark, r.technique), []).append(r)
    out = []
    for (bench, tech), recs in sorted(groups.items()):
        best = best_under(recs, max_error)
        intervals = [{"lo": _json_num(iv.lo), "hi": _json_num(iv.hi), "count": iv.count,
                      "fastest": [_brief(r) for r in iv.fastest],
                      "slowest": [_brief(r) for r in iv.slowest]}
                     for iv in error_interval_report(recs)]
        by_ipt = {}
        for r in recs:
            if r.ok:
                by_ipt.setdefault(r.items_per_thread, []).append(r.est_speedup)
        ipt_table = [{"items_per_thread": k, "configs": len(v), "max_speedup": max(v),
                      "median_speedup": statistics.median(v)}
                     for k, v in sorted(by_ipt.items())]
        out.append({
            "benchmark": bench,
            "technique": tech,
            "records": len(recs),
            "failed": sum(not r.ok for r in recs),
            "best_under_max_error": _brief(best) if best else "none qualifies",
            "intervals": intervals,
            "items_per_thread": ipt_table,
        })
    return {"max_error": max_error, "groups": out}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
