import os
import sys
from pathlib import Path

import pytest

# Ensure repository root is on the import path for local package imports during tests.
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Keep GAC_* variables of the calling shell out of every test."""

    for name in [key for key in os.environ if key.startswith("GAC_")]:
        monkeypatch.delenv(name)
    monkeypatch.setenv("GAC_OUTPUT_DIR", str(tmp_path / "runs"))
