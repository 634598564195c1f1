"""Output memoization (TAF): a thread watches its own recent outputs and, once
they look steady, replays the last one for a while."""
import math

from approxsim.benchmarks import Synthetic
from approxsim.directives import ApproxSpec
from approxsim.metrics import mape
from approxsim.taf import TafConfig, TafState, rsd, taf_step

print("rsd of a flat window:", rsd([7, 7, 7]), " of a noisy one: %.3f" % rsd([1, 5, 9]))

cfg = TafConfig(h_size=2, p_size=2, threshold=math.inf)
state = TafState.fresh(cfg)
trace = [taf_step(state, cfg, lambda: 7.0)[1] for _ in range(8)]
print("path per invocation:", ["approx" if a else "acc" for a in trace])

for profile in ("constant", "slow_drift", "noise"):
    s = Synthetic(profile=profile)
    base = s.run(None)
    print(f"\n{profile}")
    for p in (2, 8, 32):
        r = s.run(ApproxSpec.make_taf(2, p, 0.5))
        print(f"  p={p:3d} rate {r.approx_rate:.3f}  MAPE {mape(base.qoi, r.qoi):.2e}  "
              f"speedup {base.total_cost / r.total_cost:.2f}")
