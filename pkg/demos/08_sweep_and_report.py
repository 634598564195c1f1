"""A small Cartesian sweep written to CSV, then summarised."""
import json
import os
import tempfile

from approxsim import harness

cfg = harness.SweepConfig(benchmark="blackscholes", technique="taf", h_size=[1, 2],
                          p_size=[8, 64, 512], thresholds=[0.3, 5.0])
out = os.path.join(tempfile.mkdtemp(), "bs_taf.csv")
records = harness.run_sweep(cfg, out)
print(len(records), "records ->", out)

report = harness.build_report(records, max_error=0.05)
group = report["groups"][0]
print("best under 5% MAPE:", json.dumps(group["best_under_max_error"], indent=1))
for iv in group["intervals"]:
    if iv["count"]:
        print(f"error {iv['lo']:.4f}..{iv['hi']:.4f}: {iv['count']} configs, "
              f"fastest {iv['fastest'][0]['est_speedup']:.2f}")
