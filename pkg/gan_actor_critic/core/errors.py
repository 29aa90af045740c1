"""Exception hierarchy shared by every subsystem of the engine."""

from __future__ import annotations

from typing import Optional, Sequence


class EngineError(Exception):
    """Base exception for all engine errors."""


class ShapeError(EngineError, ValueError):
    """Raised when tensor or array shapes are incompatible."""

    def __init__(
        self,
        message: str,
        left: Optional[Sequence[int]] = None,
        right: Optional[Sequence[int]] = None,
    ) -> None:
        if left is not None and right is not None:
            message = f"{message}: {tuple(left)} vs {tuple(right)}"
        super().__init__(message)
        self.left = tuple(left) if left is not None else None
        self.right = tuple(right) if right is not None else None


class NonFiniteError(EngineError, FloatingPointError):
    """Raised when a NaN or infinity shows up where only finite values are allowed.

    ``op`` names the primitive or training step that produced the value,
    ``row`` the offending batch row and ``coordinate`` the perturbed input
    coordinate of a finite-difference check, whichever applies.
    """

    def __init__(
        self,
        message: str,
        *,
        op: Optional[str] = None,
        row: Optional[int] = None,
        coordinate: Optional[int] = None,
    ) -> None:
        super().__init__(message)
        self.op = op
        self.row = row
        self.coordinate = coordinate


class TapeError(EngineError):
    """Raised when a computation tape is misused."""


class ConfigError(EngineError, ValueError):
    """Raised for unknown configuration keys or values that fail validation."""

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key


class EpisodeDoneError(EngineError):
    """Raised when an environment is stepped after its episode finished."""


class BufferUnderfilledError(EngineError):
    """Raised when a replay buffer cannot serve a sample yet."""

    def __init__(self, required: int, available: int) -> None:
        super().__init__(
            f"Replay buffer holds {available} transitions; at least {required} required"
        )
        self.required = required
        self.available = available


class SpecMismatchError(EngineError, ValueError):
    """Raised when a checkpoint, environment or run does not match the expected contract."""


class CheckpointError(EngineError):
    """Raised when a checkpoint container cannot be read or written."""


class StreamDesyncError(EngineError):
    """Raised when paired trainers consumed different positions of a shared stream."""

    def __init__(self, left: int, right: int) -> None:
        super().__init__(f"Stream desync: positions {left} and {right}")
        self.left = left
        self.right = right


class RunAbortedError(EngineError):
    """Raised when a training run stops on an error; carries the episode/step context."""

    def __init__(self, message: str, *, seed: int, episode: int, step: int) -> None:
        super().__init__(f"{message} (seed={seed}, episode={episode}, step={step})")
        self.seed = seed
        self.episode = episode
        self.step = step


__all__ = [
    "BufferUnderfilledError",
    "CheckpointError",
    "ConfigError",
    "EngineError",
    "EpisodeDoneError",
    "NonFiniteError",
    "RunAbortedError",
    "ShapeError",
    "SpecMismatchError",
    "StreamDesyncError",
    "TapeError",
]
