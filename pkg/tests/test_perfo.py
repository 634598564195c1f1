import numpy as np
import pytest
from hypothesis import given, strategies as st

from approxsim.directives import ApproxSpec
from approxsim.perfo import (PerfoConfig, PerfoCounter, PerfoKind, rewrite_bounds, should_skip,
                            skip_count)
from approxsim.region import run_map
from approxsim.simt import GridConfig


def cfg(kind, arg):
    k = PerfoKind(kind)
    return PerfoConfig(k, m=arg) if k.is_modulus else PerfoConfig(k, skip_percent=arg)


class TestConfig:
    @pytest.mark.parametrize("kind,arg", [("small", 1), ("large", 0), ("herded_small", 1),
                                          ("ini", 0), ("fini", 100)])
    def test_invalid(self, kind, arg):
        with pytest.raises(ValueError):
            cfg(kind, arg)

    def test_needs_trip_count(self):
        with pytest.raises(ValueError):
            should_skip(cfg("ini", 10), 0)


class TestPatterns:
    def test_small_four(self):
        assert [should_skip(cfg("small", 4), c) for c in range(8)] == [False, False, False, True] * 2

    def test_large_four(self):
        executed = [not should_skip(cfg("large", 4), c) for c in range(8)]
        assert executed == [True, False, False, False] * 2

    def test_ini_half(self):
        c = cfg("ini", 50)
        assert [should_skip(c, i, 10) for i in range(10)] == [True] * 5 + [False] * 5

    def test_fini(self):
        c = cfg("fini", 30)
        assert [should_skip(c, i, 10) for i in range(10)] == [False] * 7 + [True] * 3

    @given(st.integers(2, 64), st.integers(1, 20))
    def test_exact_fractions(self, m, k):
        small = sum(not should_skip(cfg("small", m), c) for c in range(k * m))
        large = sum(not should_skip(cfg("large", m), c) for c in range(k * m))
        assert small == k * (m - 1)
        assert large == k

    @given(st.integers(1, 99), st.integers(1, 10_000))
    def test_ini_fini_same_size(self, p, trip):
        n_ini = sum(should_skip(cfg("ini", p), i, trip) for i in range(trip)) if trip < 500 else None
        assert skip_count(p, trip) == (p * trip) // 100
        if n_ini is not None:
            assert n_ini == sum(should_skip(cfg("fini", p), i, trip) for i in range(trip))


class TestBounds:
    def test_examples(self):
        assert rewrite_bounds(cfg("fini", 20), 0, 100) == (0, 80)
        assert rewrite_bounds(cfg("ini", 90), 0, 10) == (9, 10)
        assert rewrite_bounds(cfg("ini", 10), 0, 5) == (0, 5)

    def test_offset_loop(self):
        assert rewrite_bounds(cfg("ini", 25), 100, 108) == (102, 108)

    def test_rejects_modulus_kinds(self):
        with pytest.raises(ValueError):
            rewrite_bounds(cfg("small", 2), 0, 10)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            rewrite_bounds(cfg("ini", 10), 5, 5)

    @given(st.sampled_from(["ini", "fini"]), st.integers(1, 99), st.integers(-50, 50),
           st.integers(1, 400))
    def test_matches_should_skip(self, kind, p, lo, trip):
        c = cfg(kind, p)
        nlo, nhi = rewrite_bounds(c, lo, lo + trip)
        kept = [i for i in range(lo, lo + trip) if not should_skip(c, i - lo, trip)]
        assert kept == list(range(nlo, nhi))


def test_counter():
    c = PerfoCounter()
    assert [c.next(3) for _ in range(3)] == [0, 1, 2]
    assert c.peek(3) == 3 and c.peek(4) == 0


class TestOnSimulator:
    def test_executed_outputs_untouched(self):
        vals = np.arange(1, 257, dtype=float)
        g = GridConfig(2, 32, items_per_thread=4)
        out = np.full(256, -1.0)
        run = run_map(ApproxSpec.make_perfo("small", 4), lambda i: vals[i], 256, g, out=out)
        skipped = out == -1.0
        assert skipped.sum() == 64 == run.approx_invocations
        assert np.array_equal(out[~skipped], vals[~skipped])
        # the 4th encounter of every thread is the last grid-stride step
        assert np.all(skipped[192:]) and not skipped[:192].any()

    def test_ini_fini_drop_the_ends(self):
        vals = np.arange(100, dtype=float)
        g = GridConfig(1, 32, items_per_thread=4)
        out = np.full(100, np.nan)
        run = run_map(ApproxSpec.make_perfo("ini", 30), lambda i: vals[i], 100, g, out=out)
        assert np.isnan(out[:30]).all() and np.array_equal(out[30:], vals[30:])
        assert run.approx_invocations == 30 and run.total_invocations == 100
        out = np.full(100, np.nan)
        run_map(ApproxSpec.make_perfo("fini", 30), lambda i: vals[i], 100, g, out=out)
        assert np.isnan(out[70:]).all() and np.array_equal(out[:70], vals[:70])

    @given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 6), st.integers(2, 5),
           st.sampled_from(["herded_small", "herded_large"]), st.data())
    def test_herded_never_diverges(self, teams, warps, ipt, m, kind, data):
        g = GridConfig(teams, 8 * warps, warp_size=8, items_per_thread=ipt)
        n = data.draw(st.integers(1, g.capacity))
        run = run_map(ApproxSpec.make_perfo(kind, m), lambda i: i * 1.0, n, g)
        assert run.stats.divergent_warp_steps == 0

    def test_per_thread_small_diverges_on_ragged_work(self):
        # each item runs an inner loop of its own length; the perforated region
        # is the inner body, so per-thread counters drift apart by the second step
        from approxsim.region import ApproxRegion
        from approxsim.simt import launch_kernel

        trips = np.array([1, 2, 3, 4] * 16)
        region = ApproxRegion(ApproxSpec.make_perfo("small", 2))

        class Ragged:
            def shared_requirements(self, grid):
                return region.shared_requirements(grid)

            def begin(self, grid):
                region.begin(grid)

            def __call__(self, team):
                for k in range(trips.max()):
                    live = team.items.copy()
                    live[team.active] = np.where(trips[team.items[team.active]] > k,
                                                 team.items[team.active], -1)
                    sub = type(team)(team.grid, team.team_id, team.step_index, live,
                                     team.arena, team.stats, team.model)
                    if sub.active.any():
                        region.invoke(sub, lambda lanes: np.zeros(len(lanes)))

        stats = launch_kernel(GridConfig(1, 32, items_per_thread=2), Ragged(), 64)
        assert stats.divergent_warp_steps > 0
