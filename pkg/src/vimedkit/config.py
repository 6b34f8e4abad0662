"""Flat key/value config files for reproducible pipeline runs.

The format is a committable subset of TOML: ``key = value`` lines, optional
``[section]`` headers that prefix keys with ``section.``, ``#`` comments, and
bare or quoted scalar values. Flags always win over config values.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def _parse_value(raw: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def load_config(path: str | Path) -> dict[str, object]:
    """Parse a config file into a flat dict of dotted keys."""
    path = Path(path)
    values: dict[str, object] = {}
    section = ""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip()
                if not section:
                    raise ConfigError(f"{path}:{lineno}: empty section name")
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            full_key = f"{section}.{key}" if section else key
            values[full_key] = _parse_value(raw)
    return values
