#!/usr/bin/env python3

from ssat_cbf.cli import bench_collision
import wandb

def run_collision_timing_experiment(config):
    print(config)

    seed = config['seed']
    num_pairs = config['num_pairs']
    lp_samples = config['lp_samples']
    print("pairs:", num_pairs)

    report, ratios = bench_collision(seed=seed, N=num_pairs, lp_samples=lp_samples, progress=True)
    print(report.to_string())
    print(ratios)

    return report, ratios

wandb.init()
report, ratios = run_collision_timing_experiment(wandb.config)

for method, row in report.iterrows():
    wandb.log({
        "method": method,
        "mean (us)": row["mean_us"],
        "median (us)": row["median_us"],
        "p99 (us)": row["p99_us"],
        "diff median (us)": row.get("diff_median_us"),
    })
wandb.log(ratios)

wandb.finish()
