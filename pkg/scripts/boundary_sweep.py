#!/usr/bin/env python3

from ssat_cbf.cli import boundary_sweep, convexity_witness
import wandb

def run_boundary_sweep_experiment(config):
    print(config)

    alpha = config['alpha']
    num_directions = config['num_directions']
    print("alpha:", alpha)

    frame = boundary_sweep(alphas=[alpha], n_directions=num_directions, progress=True)
    return frame

wandb.init()
frame = run_boundary_sweep_experiment(wandb.config)

for (method, alpha), group in frame.groupby(["method", "alpha"], dropna=False):
    witness = convexity_witness(group[["x", "y"]].dropna().to_numpy())
    wandb.log({
        "method": method,
        "alpha": alpha,
        "convex": witness is None,
        "witness depth": 0.0 if witness is None else witness.depth,
        "boundary": wandb.Table(dataframe=group[["angle", "x", "y"]]),
    })

wandb.finish()
