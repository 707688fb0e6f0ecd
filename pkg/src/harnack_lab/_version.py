"""Version string embedded in reports (git-describe style when available)."""

from __future__ import annotations

import subprocess
from pathlib import Path

__version__ = "0.1.0"
_cached: str | None = None


def version_string() -> str:
    global _cached
    if _cached is None:
        desc = ""
        try:
            out = subprocess.run(
                ["git", "describe", "--always", "--dirty"],
                cwd=Path(__file__).resolve().parent,
                capture_output=True, text=True, timeout=5)
            if out.returncode == 0:
                desc = out.stdout.strip()
        except OSError:
            pass
        _cached = f"harnack-lab {__version__}" + (f" ({desc})" if desc else "")
    return _cached
