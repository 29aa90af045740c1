from __future__ import annotations

import importlib
import importlib.util
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

DEFAULT_OUTPUT_DIR = "runs"
DEFAULT_LOG_LEVEL = "INFO"


@dataclass(slots=True)
class EngineSettings:
    """Process-level settings: where runs are written and how loudly we log.

    Values left at their defaults are overridden by ``GAC_*`` environment
    variables, which may come from a project-root ``.env`` file.
    """

    output_dir: str = DEFAULT_OUTPUT_DIR
    log_level: str = DEFAULT_LOG_LEVEL
    default_seed: int = 0
    deterministic: bool = False

    def __post_init__(self) -> None:
        self._try_load_dotenv_from_project_root()
        self._apply_env_overrides()

    def _apply_env_overrides(self) -> None:
        env_output_dir = self._get_env_value("GAC_OUTPUT_DIR")
        if env_output_dir and self.output_dir == DEFAULT_OUTPUT_DIR:
            self.output_dir = env_output_dir

        env_log_level = self._get_env_value("GAC_LOG_LEVEL")
        if env_log_level and self.log_level == DEFAULT_LOG_LEVEL:
            self.log_level = env_log_level.upper()

        env_seed = self._get_env_value("GAC_SEED")
        if env_seed and self.default_seed == 0:
            self.default_seed = int(env_seed)

        env_deterministic = self._get_env_value("GAC_DETERMINISTIC")
        if env_deterministic and not self.deterministic:
            self.deterministic = env_deterministic.lower() in {"1", "true", "yes", "on"}

    def configure_logging(self) -> None:
        """Install a root handler at ``log_level``; only the CLI calls this."""

        logging.basicConfig(
            level=getattr(logging, self.log_level, logging.INFO),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )

    def output_path(self, *parts: str) -> Path:
        return Path(self.output_dir).joinpath(*parts)

    def _get_env_value(self, name: str) -> Optional[str]:
        value = os.environ.get(name)
        if value is None:
            return None
        value = value.strip()
        return value or None

    def _try_load_dotenv_from_project_root(self) -> None:
        """
        Best-effort dotenv loading.
        - If python-dotenv is not installed: do nothing.
        - If .env is missing: do nothing.
        - Does NOT override already-set environment variables.
        """
        if importlib.util.find_spec("dotenv") is None:
            return

        project_root = Path(__file__).resolve().parents[2]
        env_path = project_root / ".env"
        if not env_path.exists():
            return

        dotenv = importlib.import_module("dotenv")
        dotenv.load_dotenv(dotenv_path=str(env_path), override=False)


__all__ = ["EngineSettings"]
