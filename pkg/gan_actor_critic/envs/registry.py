from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

from gan_actor_critic.core.errors import ConfigError

from .base import Environment
from .pendulum import Pendulum, PendulumConfig
from .reacher import Reacher2D, ReacherConfig


@dataclass
class EnvConfig:
    """Environment selection plus physical overrides.

    ``None`` keeps the task's own default for that constant.
    """

    name: str = "pendulum"
    dt: float = 0.02
    max_episode_steps: Optional[int] = None
    solve_threshold: Optional[float] = None
    torque_bound: Optional[float] = None
    damping: Optional[float] = None
    gravity: float = 10.0
    goal_radius: float = 0.05
    obs_mode: str = "compact"
    action_mode: str = "two_joint"


def _overrides(config: EnvConfig) -> Dict[str, object]:
    values: Dict[str, object] = {"dt": config.dt}
    for key in ("max_episode_steps", "solve_threshold", "torque_bound", "damping"):
        value = getattr(config, key)
        if value is not None:
            values[key] = value
    return values


def _make_reacher(config: EnvConfig) -> Environment:
    return Reacher2D(
        ReacherConfig(
            goal_radius=config.goal_radius,
            obs_mode=config.obs_mode,
            action_mode=config.action_mode,
            **_overrides(config),  # type: ignore[arg-type]
        )
    )


def _make_pendulum(config: EnvConfig) -> Environment:
    return Pendulum(PendulumConfig(gravity=config.gravity, **_overrides(config)))  # type: ignore[arg-type]


ENV_FACTORIES: Dict[str, Callable[[EnvConfig], Environment]] = {
    "reacher": _make_reacher,
    "pendulum": _make_pendulum,
}


def make_env(config: EnvConfig | str) -> Environment:
    if isinstance(config, str):
        config = EnvConfig(name=config)
    factory = ENV_FACTORIES.get(config.name)
    if factory is None:
        raise ConfigError(
            f"Unknown environment {config.name!r}; choose from {sorted(ENV_FACTORIES)}", "name"
        )
    try:
        return factory(config)
    except ValueError as exc:
        raise ConfigError(f"Invalid {config.name} configuration: {exc}") from exc


__all__ = ["ENV_FACTORIES", "EnvConfig", "make_env"]
