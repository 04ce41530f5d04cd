"""Flat ``key = value`` config files mirroring the CLI flags.

Blank lines and ``#`` comments are ignored.  Keys may use dashes or
underscores (``kappa_tr`` and ``kappa-tr`` are the same flag).
"""
from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def read_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        elif ":" in line:
            key, value = line.split(":", 1)
        else:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key = key.strip().replace("_", "-")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key] = value.strip()
    return values


def config_to_argv(values: dict[str, str]) -> list[str]:
    """Render config values as CLI flags; placed before user flags so those win."""
    argv: list[str] = []
    for key, value in values.items():
        argv.extend([f"--{key}", value])
    return argv
