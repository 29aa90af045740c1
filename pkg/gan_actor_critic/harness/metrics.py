from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import IO, Any, Deque, Dict, List, Optional, Sequence, Union

from gan_actor_critic.core.errors import SpecMismatchError
from gan_actor_critic.core.models import METRICS_HEADER, MetricsRow

METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "run.json"
AVERAGE_WINDOW = 100


class TrailingAverage:
    """Mean of the last ``window`` values, or of all values while fewer exist.

    A partial window still yields a value; whether it may count towards
    solving is decided by ``solve_min_episodes``, see :func:`episodes_to_solve`.
    """

    def __init__(self, window: int = AVERAGE_WINDOW) -> None:
        self._values: Deque[float] = deque(maxlen=window)

    def add(self, value: float) -> float:
        self._values.append(float(value))
        return self.value

    @property
    def value(self) -> float:
        if not self._values:
            return float("nan")
        return float(sum(self._values) / len(self._values))


class MetricsWriter:
    """Append-only metrics CSV; every row is flushed as soon as it is written."""

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self._handle: Optional[IO[str]] = None
        self._last_episode: Dict[int, int] = {}

    def __enter__(self) -> "MetricsWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("w", newline="", encoding="utf-8")
        csv.writer(self._handle).writerow(METRICS_HEADER)
        self._handle.flush()
        return self

    def __exit__(self, *exc_info: object) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def write(self, row: MetricsRow) -> None:
        if self._handle is None:
            raise RuntimeError("MetricsWriter must be used as a context manager")
        previous = self._last_episode.get(row.seed)
        if previous is not None and row.episode <= previous:
            raise ValueError(f"Episode index must increase per seed: {row.episode} after {previous}")
        self._last_episode[row.seed] = row.episode
        csv.writer(self._handle).writerow(row.as_row())
        self._handle.flush()


def read_metrics(path: Union[str, Path]) -> List[MetricsRow]:
    source = Path(path)
    with source.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != METRICS_HEADER:
            raise SpecMismatchError(f"{source} does not carry the metrics header")
        types = {f.name: f.type for f in fields(MetricsRow)}
        rows: List[MetricsRow] = []
        for cells in reader:
            values: Dict[str, Any] = {}
            for name, cell in zip(METRICS_HEADER, cells):
                values[name] = int(cell) if types[name] in (int, "int") else float(cell)
            rows.append(MetricsRow(**values))
    return rows


def episodes_to_solve(
    rows: Sequence[MetricsRow], threshold: float, min_episodes: int = AVERAGE_WINDOW
) -> Optional[int]:
    """Episode number at which ``avg_return_100`` first reaches ``threshold``.

    Rows before episode ``min_episodes`` never count, so with the default a
    seed is only solved over a full trailing window.
    """

    for row in rows:
        if row.episode >= min_episodes and row.avg_return_100 >= threshold:
            return row.episode
    return None


@dataclass
class RunManifest:
    """What a metrics file was produced from; ``compare`` checks these."""

    env: str
    variant: str
    reward_source: str
    solve_threshold: float
    episodes: int
    n_envs: int
    seeds: List[int]
    obs_dim: int
    act_dim: int
    solve_min_episodes: int = AVERAGE_WINDOW

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / MANIFEST_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, run_dir: Union[str, Path]) -> "RunManifest":
        path = Path(run_dir) / MANIFEST_FILE
        if not path.exists():
            raise SpecMismatchError(f"No run manifest at {path}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        try:
            return cls(**payload)
        except TypeError as exc:
            raise SpecMismatchError(f"Malformed run manifest {path}: {exc}") from exc


__all__ = [
    "AVERAGE_WINDOW",
    "MANIFEST_FILE",
    "METRICS_FILE",
    "MetricsWriter",
    "RunManifest",
    "TrailingAverage",
    "episodes_to_solve",
    "read_metrics",
]
