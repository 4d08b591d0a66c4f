"""Seeded comparison sweep: planner vs both baselines.

Runs the growing-population family (20..60 users in a 100 m venue) for a
few seeds per variant and prints mean UAV counts per method. The planner
keeps its count low where the fixed-group baseline is forced to ceil(N/10);
full 30-run sweeps with CSV output are available through the CLI
(`uavplan sweep --kind C --runs 30 --out-dir out/`).
"""
from uavplan import ChannelParams, run_experiment

table = run_experiment("C", ChannelParams(), n_runs=3, base_seed=0)

print(f"{'N_users':>8} {'planner':>9} {'fixed-alt':>10} {'fixed-n':>9}")
summary = table.summary()
variants = sorted({row["variant"] for row in summary})
for v in variants:
    cells = {row["method"]: row["uav_count_mean"] for row in summary if row["variant"] == v}
    print(f"{int(v):>8} {cells['planner']:>9.2f} {cells['fixed-altitude']:>10.2f} "
          f"{cells['fixed-n']:>9.2f}")

failures = [r for r in table.rows if r.error]
print(f"\n{len(table.rows)} runs, {len(failures)} failures")
