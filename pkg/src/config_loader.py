"""Config loader for restart-aco.

Loads YAML configuration files from the config/ directory.
All paths resolve relative to the project root.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Mapping

import yaml


# Project root: two levels up from this file (src/config_loader.py -> restart-aco/)
PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = PROJECT_ROOT / "config"

RUN_DEFAULTS_FILE = CONFIG_DIR / "run_defaults.yaml"
DEFAULT_REGISTRY_FILE = CONFIG_DIR / "known_optima.txt"
DEFAULT_OUTPUT_DIR = PROJECT_ROOT / "results"


class ConfigError(ValueError):
    """Raised for invalid configuration; the message names the offending key."""

    pass


def resolve_path(path: str | Path) -> Path:
    """Return ``path`` as absolute, relative paths taken from the project root."""
    filepath = Path(path)
    if not filepath.is_absolute():
        filepath = PROJECT_ROOT / filepath
    return filepath


def load_yaml(path: str | Path) -> dict[str, Any]:
    """Load a YAML file and return its contents as a dict.

    Args:
        path: Absolute path, or relative to project root.

    Returns:
        Parsed YAML contents.

    Raises:
        FileNotFoundError: If the YAML file does not exist.
        ConfigError: If the file is not valid YAML or not a mapping.
    """
    filepath = resolve_path(path)

    if not filepath.exists():
        raise FileNotFoundError(f"Config file not found: {filepath}")

    with open(filepath, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {filepath}: {e}") from e

    # safe_load returns None for empty files
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Top level of {filepath} must be a mapping")
    return data


def load_run_defaults() -> dict[str, Any]:
    """Load config/run_defaults.yaml (default restart and MMAS settings).

    Returns:
        Run configuration dict.
    """
    return load_yaml(RUN_DEFAULTS_FILE)


def merge_config(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Layer ``override`` over ``base``; nested sections merge key by key."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def check_keys(section: Mapping[str, Any], allowed: set[str], prefix: str = "") -> None:
    """Reject keys of ``section`` outside ``allowed``.

    Raises:
        ConfigError: Naming the first unknown key as a dotted path.
    """
    for key in section:
        if key not in allowed:
            raise ConfigError(f"Unknown config key: {prefix}{key}")


def default_output_dir() -> Path:
    """Output directory from RP_OUTPUT_DIR, else results/ under the project root."""
    env = os.environ.get("RP_OUTPUT_DIR")
    return resolve_path(env) if env else DEFAULT_OUTPUT_DIR


def default_registry_path() -> Path:
    """Optimum registry from RP_REGISTRY, else config/known_optima.txt."""
    env = os.environ.get("RP_REGISTRY")
    return resolve_path(env) if env else DEFAULT_REGISTRY_FILE
