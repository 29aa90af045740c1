"""Core records, errors, settings and seeding for gan_actor_critic."""

from .errors import EngineError
from .models import Batch, MetricsRow, StepResult, Transition
from .seeding import derive_rng, derive_seed
from .settings import EngineSettings

__all__ = [
    "Batch",
    "EngineError",
    "EngineSettings",
    "MetricsRow",
    "StepResult",
    "Transition",
    "derive_rng",
    "derive_seed",
]
