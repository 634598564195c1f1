"""Loop perforation: drop iterations by a fixed pattern."""
from approxsim.benchmarks import Synthetic
from approxsim.directives import parse_directive
from approxsim.perfo import PerfoConfig, PerfoKind, rewrite_bounds, should_skip

for kind in (PerfoKind.SMALL, PerfoKind.LARGE):
    cfg = PerfoConfig(kind, m=4)
    print(kind.value, "".join("." if should_skip(cfg, c) else "x" for c in range(16)))

print("ini 25% of [0,40):", rewrite_bounds(PerfoConfig(PerfoKind.INI, skip_percent=25), 0, 40))
print("fini 25% of [0,40):", rewrite_bounds(PerfoConfig(PerfoKind.FINI, skip_percent=25), 0, 40))

s = Synthetic(profile="slow_drift")
base = s.run(None)
for d in ("perfo(small:4)", "perfo(large:4)", "perfo(herded_small:4)", "perfo(fini:10)"):
    r = s.run(parse_directive(d))
    print(f"{d:24s} rate {r.approx_rate:.3f} divergent {r.stats.divergent_warp_steps:3d} "
          f"speedup {base.total_cost / r.total_cost:.2f}")
