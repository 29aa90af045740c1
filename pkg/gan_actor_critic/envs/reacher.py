"""Torque-driven 2-link planar arm that must hold its fingertip on a target.

The arm moves in the horizontal plane (no gravity). Each step the fingertip
spends within ``goal_radius`` of the target earns +0.1, so a whole 1000-step
episode on target returns 100 against a solve threshold of 30.

Observation (compact, 10 values)::

    [cos θ1, sin θ1, cos θ2, sin θ2, ω1, ω2, target_x, target_y, tip_x, tip_y]

The padded mode appends zeros up to 26 values; the four-axis action mode takes
4 torques of which only the first two act on the joints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gan_actor_critic.core.models import Array

from .base import EnvSpec, EnvState, Environment, wrap_angle

GOAL_REWARD = 0.1
PADDED_OBS_DIM = 26
COMPACT_OBS_DIM = 10


@dataclass(frozen=True)
class ReacherConfig:
    link_lengths: tuple[float, float] = (0.1, 0.1)
    link_masses: tuple[float, float] = (1.0, 1.0)
    goal_radius: float = 0.05
    dt: float = 0.02
    max_episode_steps: int = 1000
    torque_bound: float = 1.0
    # Maps a unit action to joint torque in N·m.
    torque_gain: float = 0.05
    damping: float = 0.005
    omega_max: float = 10.0
    target_min_radius: float = 0.05
    target_max_radius: float = 0.19
    obs_mode: str = "compact"
    action_mode: str = "two_joint"
    solve_threshold: float = 30.0

    def __post_init__(self) -> None:
        if self.obs_mode not in {"compact", "padded"}:
            raise ValueError(f"Unknown reacher obs_mode {self.obs_mode!r}")
        if self.action_mode not in {"two_joint", "four_axis"}:
            raise ValueError(f"Unknown reacher action_mode {self.action_mode!r}")
        if not 0.0 <= self.target_min_radius <= self.target_max_radius <= sum(self.link_lengths):
            raise ValueError("Target annulus must lie within the arm's reach")


def fingertip(theta: Array, link_lengths: tuple[float, float]) -> Array:
    l1, l2 = link_lengths
    elbow = np.array([l1 * math.cos(theta[0]), l1 * math.sin(theta[0])])
    total = theta[0] + theta[1]
    return elbow + np.array([l2 * math.cos(total), l2 * math.sin(total)])


def reacher_reward(state: EnvState, config: ReacherConfig) -> float:
    """+0.1 when the fingertip lies within the goal radius of the target, else 0."""

    distance = float(np.linalg.norm(fingertip(state.theta, config.link_lengths) - state.target))
    return GOAL_REWARD if distance <= config.goal_radius else 0.0


class Reacher2D(Environment):
    def __init__(self, config: ReacherConfig | None = None) -> None:
        super().__init__()
        self.config = config or ReacherConfig()
        act_dim = 2 if self.config.action_mode == "two_joint" else 4
        bound = self.config.torque_bound
        self.spec = EnvSpec(
            name="reacher",
            obs_dim=COMPACT_OBS_DIM if self.config.obs_mode == "compact" else PADDED_OBS_DIM,
            act_dim=act_dim,
            act_low=(-bound,) * act_dim,
            act_high=(bound,) * act_dim,
            max_episode_steps=self.config.max_episode_steps,
            solve_threshold=self.config.solve_threshold,
            dt=self.config.dt,
        )

    def _initial_state(self, rng: np.random.Generator) -> EnvState:
        cfg = self.config
        theta = rng.uniform(-math.pi, math.pi, size=2)
        omega = rng.uniform(-0.1, 0.1, size=2)
        radius = math.sqrt(rng.uniform(cfg.target_min_radius**2, cfg.target_max_radius**2))
        angle = rng.uniform(-math.pi, math.pi)
        target = np.array([radius * math.cos(angle), radius * math.sin(angle)])
        return EnvState(theta=wrap_angle(theta), omega=omega, target=target)

    def angular_acceleration(self, theta: Array, omega: Array, torque: Array) -> Array:
        cfg = self.config
        (l1, l2), (m1, m2) = cfg.link_lengths, cfg.link_masses
        lc1, lc2 = l1 / 2.0, l2 / 2.0
        i1, i2 = m1 * l1 * l1 / 12.0, m2 * l2 * l2 / 12.0
        cos2, sin2 = math.cos(theta[1]), math.sin(theta[1])

        d11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * cos2) + i1 + i2
        d12 = m2 * (lc2 * lc2 + l1 * lc2 * cos2) + i2
        d22 = m2 * lc2 * lc2 + i2
        h = m2 * l1 * lc2 * sin2
        coriolis = np.array(
            [-h * (2.0 * omega[0] * omega[1] + omega[1] * omega[1]), h * omega[0] * omega[0]]
        )
        rhs = cfg.torque_gain * torque - cfg.damping * omega - coriolis
        det = d11 * d22 - d12 * d12
        return np.array(
            [(d22 * rhs[0] - d12 * rhs[1]) / det, (d11 * rhs[1] - d12 * rhs[0]) / det]
        )

    def _integrate(self, action: Array) -> None:
        assert self.state is not None
        cfg = self.config
        torque = action[:2]
        state = self.state
        alpha = self.angular_acceleration(state.theta, state.omega, torque)
        state.omega = np.clip(state.omega + alpha * cfg.dt, -cfg.omega_max, cfg.omega_max)
        state.theta = wrap_angle(state.theta + state.omega * cfg.dt)

    def reward(self, state: EnvState, action: Array) -> float:
        return reacher_reward(state, self.config)

    def observation(self) -> Array:
        assert self.state is not None
        return self._encode(self.state.theta, self.state.omega, self.state.target)

    def goal_observation(self) -> Array:
        """Observation of the arm at rest with its fingertip on the target (elbow-up solution)."""

        assert self.state is not None
        l1, l2 = self.config.link_lengths
        target = self.state.target
        distance_sq = float(target @ target)
        cos_q2 = float(np.clip((distance_sq - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0))
        q2 = math.acos(cos_q2)
        q1 = math.atan2(target[1], target[0]) - math.atan2(l2 * math.sin(q2), l1 + l2 * cos_q2)
        theta = wrap_angle(np.array([q1, q2]))
        return self._encode(theta, np.zeros(2), target)

    def _encode(self, theta: Array, omega: Array, target: Array) -> Array:
        tip = fingertip(theta, self.config.link_lengths)
        obs = np.array(
            [
                math.cos(theta[0]),
                math.sin(theta[0]),
                math.cos(theta[1]),
                math.sin(theta[1]),
                omega[0],
                omega[1],
                target[0],
                target[1],
                tip[0],
                tip[1],
            ]
        )
        if self.spec.obs_dim > COMPACT_OBS_DIM:
            obs = np.concatenate([obs, np.zeros(self.spec.obs_dim - COMPACT_OBS_DIM)])
        return obs


__all__ = ["GOAL_REWARD", "Reacher2D", "ReacherConfig", "fingertip", "reacher_reward"]
