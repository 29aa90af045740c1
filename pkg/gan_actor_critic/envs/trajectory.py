from __future__ import annotations

import csv
from pathlib import Path
from typing import IO, List, Optional, Union

from gan_actor_critic.core.models import Array

from .base import EnvSpec


def trajectory_header(spec: EnvSpec) -> List[str]:
    return (
        ["episode", "step"]
        + [f"obs_{i}" for i in range(spec.obs_dim)]
        + [f"act_{i}" for i in range(spec.act_dim)]
        + ["reward", "done"]
    )


class TrajectoryWriter:
    """Append ``episode,step,obs...,act...,reward,done`` rows to a CSV file."""

    def __init__(self, path: Union[str, Path], spec: EnvSpec) -> None:
        self.path = Path(path)
        self.spec = spec
        self._handle: Optional[IO[str]] = None

    def __enter__(self) -> "TrajectoryWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("w", newline="", encoding="utf-8")
        csv.writer(self._handle).writerow(trajectory_header(self.spec))
        return self

    def __exit__(self, *exc_info: object) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def write(self, episode: int, step: int, obs: Array, action: Array, reward: float, done: bool) -> None:
        if self._handle is None:
            raise RuntimeError("TrajectoryWriter must be used as a context manager")
        row = [str(episode), str(step)]
        row.extend(repr(float(v)) for v in obs)
        row.extend(repr(float(v)) for v in action)
        row.extend([repr(float(reward)), str(int(done))])
        csv.writer(self._handle).writerow(row)


__all__ = ["TrajectoryWriter", "trajectory_header"]
