"""Input memoization (iACT) on Blackscholes: lanes share small tables of
(input, output) pairs and reuse a neighbour's result when inputs are close."""
from approxsim.benchmarks import Blackscholes
from approxsim.metrics import mape
from approxsim.simt import SharedArenaOverflow

bs = Blackscholes()
base = bs.run(None)
print("portfolio:", bs.n_items, "options")
print("%6s %6s %6s %8s %8s %8s" % ("tsize", "thr", "tpw", "rate", "MAPE", "speedup"))
for tsize in (1, 4):
    for thr in (0.1, 0.9, 5.0):
        for tpw in (1, 32):
            r = bs.run(bs.make_iact(tsize, thr, tpw))
            print("%6d %6.1f %6d %8.3f %8.4f %8.2f" % (
                tsize, thr, tpw, r.approx_rate, mape(base.qoi, r.qoi),
                base.total_cost / r.total_cost))

# every lookup scans the table, hit or miss, so a table that never hits is a slowdown
jittered = Blackscholes(jitter=0.01)
jbase = jittered.run(None)
r = jittered.run(jittered.make_iact(4, 0.0, 32))
print("\nexact-match tables, jittered spots: rate %.3f speedup %.3f"
      % (r.approx_rate, jbase.total_cost / r.total_cost))

# one table per lane with 8 six-wide entries does not fit in team shared memory
try:
    bs.run(bs.make_iact(8, 0.5, 32))
except SharedArenaOverflow as e:
    print("tsize 8, 32 tables per warp:", e)
