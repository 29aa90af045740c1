"""Torque-limited point-mass pendulum; θ = 0 is upright, θ = π hangs down.

The torque bound is below ``m·g·l`` so the pole has to be swung up. The reward
is the negative quadratic cost ``θ² + 0.1·ω² + 0.001·u²``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gan_actor_critic.core.models import Array

from .base import EnvSpec, EnvState, Environment, wrap_angle


@dataclass(frozen=True)
class PendulumConfig:
    gravity: float = 10.0
    length: float = 1.0
    mass: float = 1.0
    damping: float = 0.0
    torque_bound: float = 2.0
    dt: float = 0.02
    max_episode_steps: int = 200
    omega_max: float = 8.0
    # Between a random policy and a pole swung up and held within the episode.
    solve_threshold: float = -250.0

    @property
    def small_angle_period(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.length / self.gravity)


class Pendulum(Environment):
    def __init__(self, config: PendulumConfig | None = None) -> None:
        super().__init__()
        self.config = config or PendulumConfig()
        bound = self.config.torque_bound
        self.spec = EnvSpec(
            name="pendulum",
            obs_dim=3,
            act_dim=1,
            act_low=(-bound,),
            act_high=(bound,),
            max_episode_steps=self.config.max_episode_steps,
            solve_threshold=self.config.solve_threshold,
            dt=self.config.dt,
        )

    def _initial_state(self, rng: np.random.Generator) -> EnvState:
        theta = rng.uniform(-math.pi, math.pi, size=1)
        omega = rng.uniform(-1.0, 1.0, size=1)
        return EnvState(
            theta=wrap_angle(theta),
            omega=omega,
            target=np.array([0.0, self.config.length]),
        )

    def angular_acceleration(self, theta: Array, omega: Array, torque: Array) -> Array:
        cfg = self.config
        inertia = cfg.mass * cfg.length * cfg.length
        return (
            (cfg.gravity / cfg.length) * np.sin(theta)
            + torque / inertia
            - cfg.damping * omega / inertia
        )

    def _integrate(self, action: Array) -> None:
        assert self.state is not None
        cfg = self.config
        state = self.state
        alpha = self.angular_acceleration(state.theta, state.omega, action)
        state.omega = np.clip(state.omega + alpha * cfg.dt, -cfg.omega_max, cfg.omega_max)
        state.theta = wrap_angle(state.theta + state.omega * cfg.dt)

    def reward(self, state: EnvState, action: Array) -> float:
        theta = float(state.theta[0])
        omega = float(state.omega[0])
        torque = float(action[0])
        return -(theta * theta + 0.1 * omega * omega + 0.001 * torque * torque)

    def energy(self) -> float:
        """Total mechanical energy, potential measured from the pivot."""

        assert self.state is not None
        cfg = self.config
        omega = float(self.state.omega[0])
        kinetic = 0.5 * cfg.mass * cfg.length * cfg.length * omega * omega
        potential = cfg.mass * cfg.gravity * cfg.length * math.cos(float(self.state.theta[0]))
        return kinetic + potential

    def observation(self) -> Array:
        assert self.state is not None
        theta = float(self.state.theta[0])
        return np.array([math.cos(theta), math.sin(theta), float(self.state.omega[0])])

    def goal_observation(self) -> Array:
        return np.array([1.0, 0.0, 0.0])


__all__ = ["Pendulum", "PendulumConfig"]
