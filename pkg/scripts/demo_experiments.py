#!/usr/bin/env python3
"""Demo script to exercise the `gan-actor-critic` package functions.

Runs a short bridge check, a short world-model fit and two tiny training
runs, then compares them. Every call prints a concise summary; failures are
printed and the demo moves on. It's intended for interactive testing.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from gan_actor_critic import compare_runs, evaluate, fit_world_model, run_bridge, train
from gan_actor_critic.bridge import BridgeConfig
from gan_actor_critic.harness import parse_config

TRAIN_TEMPLATE = """
[run]
variant = {variant}
episodes = {episodes}
seeds = 0

[env]
name = pendulum

[ddpg]
hidden_sizes = 64, 64
warmup_steps = 400

[world_model]
hidden_sizes = 64, 64
n_critic = 2
"""


def main() -> None:
    parser = argparse.ArgumentParser(description="Demo the gan-actor-critic package functions.")
    parser.add_argument("--out", default="runs/demo", help="Directory that receives every demo output")
    parser.add_argument("--episodes", type=int, default=5, help="Episode budget of each training run")
    parser.add_argument("--bridge-steps", type=int, default=50, help="Paired updates in the bridge check")
    args = parser.parse_args()
    out = Path(args.out)

    # run_bridge
    try:
        report = run_bridge(BridgeConfig(steps=args.bridge_steps), out / "bridge", seed=0)
        print(f"--- run_bridge: {report.steps} steps ---")
        print(f"deviation {report.deviation:.3e}, different-seed control {report.control_deviation}")
        print()
    except Exception as e:  # pragma: no cover - demo runner
        print("run_bridge error:", e)

    # fit_world_model
    try:
        config = parse_config("[modelfit]\ntransitions = 2000\nholdout = 200\ntrain_steps = 200\n")
        fit = fit_world_model(config, out / "modelfit", seed=0)
        print("--- fit_world_model ---")
        print(f"one-step mse {fit.one_step_mse:.6f} vs no-change {fit.persistence_mse:.6f}")
        print(f"open-loop rms {fit.open_loop_rms}")
        print()
    except Exception as e:  # pragma: no cover - demo runner
        print("fit_world_model error:", e)

    # train (both variants)
    run_dirs = {}
    for variant in ("model_free_ddpg", "model_based_ac"):
        try:
            config = parse_config(TRAIN_TEMPLATE.format(variant=variant, episodes=args.episodes))
            result = train(config, out / variant, deterministic=True)
            run_dirs[variant] = result.metrics_path.parent
            print(f"--- train({variant}): exit code {result.exit_code} ---")
            for seed in result.seeds:
                print(f"seed {seed.seed}: {seed.episodes} episodes, final avg100 {seed.final_average:.2f}")
            if result.seeds and result.seeds[0].checkpoint is not None:
                evaluation = evaluate(result.seeds[0].checkpoint, "pendulum", episodes=2)
                print(f"greedy mean return {evaluation.mean_return:.2f}")
            print()
        except Exception as e:  # pragma: no cover - demo runner
            print(f"train({variant}) error:", e)

    # compare_runs
    try:
        if len(run_dirs) == 2:
            print(compare_runs(run_dirs["model_based_ac"], run_dirs["model_free_ddpg"]).render())
    except Exception as e:  # pragma: no cover - demo runner
        print("compare_runs error:", e)


if __name__ == "__main__":
    main()
