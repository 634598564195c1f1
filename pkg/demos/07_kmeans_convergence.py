"""Memoizing the distance kernel of K-Means changes how many Lloyd
iterations it takes, not only how long each one lasts."""
from approxsim.benchmarks import KMeans
from approxsim.metrics import mcr

km = KMeans(seed=0)
base = km.run(None)
print("baseline iterations:", base.iterations)
for tsize, thr, tpw in [(1, 0.1, 32), (2, 0.5, 8), (4, 0.9, 1), (8, 0.9, 2)]:
    r = km.run(km.make_iact(tsize, thr, tpw))
    print(f"tsize {tsize} thr {thr} tpw {tpw:2d}: iterations {r.iterations:2d} "
          f"rate {r.approx_rate:.2f} MCR {mcr(base.qoi, r.qoi):.3f} "
          f"speedup {base.total_cost / r.total_cost:.2f}")
