"""Command-line entry point: ``gac train|eval|compare|bridge|modelfit``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from .api import ExperimentClient
from .core.errors import EngineError
from .core.settings import EngineSettings
from .harness import EXIT_ERROR, ExperimentConfig, load_config

logger = logging.getLogger(__name__)


def _load(path: Optional[str]) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig().validate()


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Experiment file with [section] / key = value lines")
    parser.add_argument("--seed", type=int, default=None, help="Global seed; overrides [run] seeds")
    parser.add_argument("--out", default=None, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gac", description="Model-based actor-critic experiments.")
    parser.add_argument("--log-level", default=None, help="Overrides GAC_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train an agent and write metrics.csv")
    _add_common(train)
    train.add_argument(
        "--deterministic",
        action="store_true",
        help="Write wall_ms = 0 so metrics.csv is byte-stable; training is seed-deterministic either way",
    )

    evaluate = commands.add_parser("eval", help="Evaluate a saved actor without exploration")
    _add_common(evaluate)
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--episodes", type=int, default=10)
    evaluate.add_argument("--trajectory", default=None, help="Optional CSV dump of every evaluated step")

    compare = commands.add_parser("compare", help="Compare episodes-to-solve of two runs")
    compare.add_argument("run_a")
    compare.add_argument("run_b")
    compare.add_argument("--seed", type=int, default=None, help="Compare only this seed of both runs")
    compare.add_argument("--out", default=None, help="Also write the report to <out>/comparison.txt")

    bridge = commands.add_parser("bridge", help="GAN vs. gated actor-critic equivalence experiment")
    _add_common(bridge)
    bridge.add_argument("--steps", type=int, default=None)

    modelfit = commands.add_parser("modelfit", help="Train only the world model on random-policy data")
    _add_common(modelfit)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = EngineSettings(log_level=args.log_level.upper()) if args.log_level else EngineSettings()
    settings.configure_logging()
    client = ExperimentClient(settings)

    try:
        if args.command == "train":
            result = client.train(
                _load(args.config), args.out, seed=args.seed, deterministic=args.deterministic or None
            )
            for outcome in result.seeds:
                status = f"solved at episode {outcome.episodes_to_solve}" if outcome.solved else "unsolved"
                print(f"seed {outcome.seed}: {status}, final avg100 {outcome.final_average:.3f}")
            if result.error is not None:
                print(f"error: {result.error}", file=sys.stderr)
            print(f"metrics: {result.metrics_path}")
            return result.exit_code

        if args.command == "eval":
            config = _load(args.config)
            report = client.evaluate(
                args.checkpoint, config.env, args.episodes, seed=args.seed, trajectory_path=args.trajectory
            )
            print(f"mean return over {len(report.returns)} episodes: {report.mean_return:.4f}")
            return 0

        if args.command == "compare":
            print(client.compare(args.run_a, args.run_b, args.out, seed=args.seed).render(), end="")
            return 0

        if args.command == "bridge":
            bridge_config = _load(args.config).bridge
            if args.steps is not None:
                bridge_config.steps = args.steps
                bridge_config.validate()
            bridge_report = client.bridge(bridge_config, args.out, seed=args.seed)
            print(f"max parameter deviation after {bridge_report.steps} steps: {bridge_report.deviation:.3e}")
            if bridge_report.control_deviation is not None:
                print(f"different-seed control deviation: {bridge_report.control_deviation:.3e}")
            if bridge_report.trace_path is not None:
                print(f"trace: {bridge_report.trace_path}")
            return 0

        if args.command == "modelfit":
            fit = client.fit_world_model(_load(args.config), args.out, seed=args.seed)
            print(f"one-step mse {fit.one_step_mse:.6f} (no-change baseline {fit.persistence_mse:.6f})")
            print(f"open-loop rms per dim: {np.array2string(fit.open_loop_rms, precision=4)}")
            print(f"rollout: {fit.rollout_path}")
            return 0
    except EngineError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


__all__ = ["build_parser", "main"]
