"""Experiment configuration and its line-oriented text format.

Files look like::

    # pendulum comparison
    [run]
    variant = model_based_ac
    seeds = 0, 1, 2

    [env]
    name = pendulum

Every section maps onto one dataclass; every key onto one of its fields.
Unknown sections and keys are rejected. Values are coerced to the field
type: ``true``/``false`` for booleans, ``none`` for optional fields and
comma lists for tuples.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from gan_actor_critic.agents.ddpg import DdpgConfig
from gan_actor_critic.agents.model_based import REWARD_SOURCES
from gan_actor_critic.agents.replay import ReplayConfig
from gan_actor_critic.agents.world_model import WorldModelConfig
from gan_actor_critic.bridge.trainers import BridgeConfig
from gan_actor_critic.core.errors import ConfigError
from gan_actor_critic.envs.registry import ENV_FACTORIES, EnvConfig

from .metrics import AVERAGE_WINDOW

VARIANTS = ("model_free_ddpg", "model_based_ac")
N_ENVS_PRESETS = (1, 20)

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass
class RunConfig:
    """What to train and for how long.

    A seed counts as solved once the trailing average reaches the threshold
    at episode ``solve_min_episodes`` or later.
    """

    variant: str = "model_free_ddpg"
    n_envs: int = 1
    seeds: Tuple[int, ...] = (0,)
    episodes: int = 300
    reward_source: str = "env_native"
    stop_on_solve: bool = False
    save_checkpoints: bool = True
    solve_min_episodes: int = AVERAGE_WINDOW

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}", "variant")
        if self.n_envs not in N_ENVS_PRESETS:
            raise ConfigError(f"n_envs must be one of {N_ENVS_PRESETS}, got {self.n_envs}", "n_envs")
        if not self.seeds:
            raise ConfigError("At least one seed is required", "seeds")
        if self.episodes < 0:
            raise ConfigError("episodes must be non-negative", "episodes")
        if self.solve_min_episodes < 1:
            raise ConfigError("solve_min_episodes must be at least 1", "solve_min_episodes")
        if self.reward_source not in REWARD_SOURCES:
            raise ConfigError(
                f"reward_source must be one of {REWARD_SOURCES}, got {self.reward_source!r}", "reward_source"
            )


@dataclass
class ModelFitConfig:
    """World-model-only training on random-policy data."""

    transitions: int = 10_000
    holdout: int = 1_000
    train_steps: int = 5_000
    open_loop_horizon: int = 10

    def validate(self) -> None:
        if self.transitions < 1 or self.holdout < 1 or self.train_steps < 0 or self.open_loop_horizon < 1:
            raise ConfigError("modelfit sizes must be positive")


@dataclass
class ExperimentConfig:
    run: RunConfig = field(default_factory=RunConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    world_model: WorldModelConfig = field(default_factory=WorldModelConfig)
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    modelfit: ModelFitConfig = field(default_factory=ModelFitConfig)

    def validate(self) -> "ExperimentConfig":
        self.run.validate()
        if self.env.name not in ENV_FACTORIES:
            raise ConfigError(f"Unknown environment {self.env.name!r}; choose from {sorted(ENV_FACTORIES)}", "name")
        if self.replay.capacity < 1 or self.replay.batch_size < 1:
            raise ConfigError("replay capacity and batch_size must be positive")
        self.ddpg.validate()
        self.world_model.validate()
        self.bridge.validate()
        self.modelfit.validate()
        return self

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, run=dataclasses.replace(self.run, seeds=(int(seed),)))


SECTIONS: Tuple[str, ...] = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def _section_type(name: str) -> Any:
    return typing.get_type_hints(ExperimentConfig)[name]


def _coerce(text: str, hint: Any, key: str) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is Union:
        inner = [arg for arg in args if arg is not type(None)]
        if text.lower() == "none":
            return None
        return _coerce(text, inner[0], key)
    if origin in (tuple, Tuple):
        item_type = args[0] if args else str
        parts = [part.strip() for part in text.split(",")]
        return tuple(_coerce(part, item_type, key) for part in parts if part)
    if hint is bool:
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}", key)
    try:
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {hint.__name__}, got {text!r}", key) from None
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(item) for item in value)
    return str(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse experiment text into a validated :class:`ExperimentConfig`."""

    values: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    section: str | None = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in values:
                raise ConfigError(f"line {number}: unknown section [{section}]", section)
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"line {number}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        hints = typing.get_type_hints(_section_type(section))
        if key not in hints:
            raise ConfigError(f"line {number}: unknown key {key!r} in [{section}]", key)
        if key in values[section]:
            raise ConfigError(f"line {number}: duplicate key {key!r} in [{section}]", key)
        values[section][key] = _coerce(value, hints[key], f"{section}.{key}")

    try:
        config = ExperimentConfig(
            **{name: _section_type(name)(**entries) for name, entries in values.items()}
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()


def dump_config(config: ExperimentConfig) -> str:
    """Canonical text: sections in fixed order, keys sorted, every default written out."""

    lines: List[str] = []
    for name in SECTIONS:
        section = getattr(config, name)
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        for item in sorted(dataclasses.fields(section), key=lambda f: f.name):
            lines.append(f"{item.name} = {_format(getattr(section, item.name))}")
    return "\n".join(lines) + "\n"


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    source = Path(path)
    if not source.exists():
        raise ConfigError(f"Config file not found: {source}")
    return parse_config(source.read_text(encoding="utf-8"))


__all__ = [
    "ExperimentConfig",
    "ModelFitConfig",
    "N_ENVS_PRESETS",
    "RunConfig",
    "SECTIONS",
    "VARIANTS",
    "dump_config",
    "load_config",
    "parse_config",
]
