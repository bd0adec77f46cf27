#!/usr/bin/env python3

from ssat_cbf.planner import CommandScript
from ssat_cbf.simharness import EpisodeConfig, load_scene, run_episode, verify_safety
import numpy as np
import wandb

def run_step_climb_experiment(config):
    print(config)

    scene = load_scene(config['scene'])
    script = CommandScript.constant(config['speed'], 0.0)
    print("scene:", scene.name, "cbf:", config['cbf'])

    episode_config = EpisodeConfig.from_dict({
        'dt': config['dt'],
        'duration': config['duration'],
        'seed': config['seed'],
        'alpha_max': config['alpha'],
        'alpha_abs': config['alpha'],
        'lambda_collision': config['lambda_collision'],
        'body_raise': config['body_raise'],
        'start': [config['start_x'], 0.0, 0.0],
    }).with_cbf(config['cbf'])

    log = run_episode(scene, script, episode_config, progress=True)
    report = verify_safety(log, scene)
    print(report.summary())

    return log, report

wandb.init()
log, report = run_step_climb_experiment(wandb.config)

body_h = log.min_h[:, 1]
for k in range(len(log)):
    wandb.log({
        "time": log.t[k],
        "forward position": log.states[k, 0],
        "body height": log.states[k, 7],
        "min body h": body_h[k] if np.isfinite(body_h[k]) else None,
        "tick time (us)": log.tick_us[k],
    })
wandb.log({
    "min body margin": report.min_body_margin,
    "max joint excursion": report.max_joint_excursion,
    "foothold violations": report.foothold_violations,
    "violations": len(report.violations),
    "fallback ticks": int(log.fallback.sum()),
})

wandb.finish()
