import json
import os
import sys

from .base import SearchBudget
from .constants import (
    DEFAULT_CONFIG_PATH,
    DEFAULT_DEPTH,
    DEFAULT_FORMAT,
    DEFAULT_FRESH,
    DEFAULT_MODAL_USES,
    DEFAULT_POOL_EXTRA,
    DEFAULT_SEED,
)
from .custom_exceptions import ConfigError
from .custom_types import Config
from .helpers import read_text
from .logger import logger
from .syntax import parse_frames

FORMATS = ("json", "text")


def default_config() -> Config:
    return {
        "frames": "",
        "depth": DEFAULT_DEPTH,
        "modal_uses": DEFAULT_MODAL_USES,
        "fresh": DEFAULT_FRESH,
        "pool_extra": DEFAULT_POOL_EXTRA,
        "format": DEFAULT_FORMAT,
        "seed": DEFAULT_SEED,
        "emit_base": None,
        "emit_proof": None,
    }


def load_config(path: str) -> dict:
    try:
        with open(path, mode="r") as config_file:
            loaded = json.load(config_file)
    except json.JSONDecodeError as error:
        raise ConfigError(f"{path} is not valid JSON: {error}")
    if not isinstance(loaded, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return loaded


def build_config(overrides: dict, path: str | None = None) -> Config:
    """Defaults, then the config file, then explicit flags."""
    config = default_config()
    if path is None and os.path.isfile(DEFAULT_CONFIG_PATH):
        path = DEFAULT_CONFIG_PATH
    if path is not None:
        logger.info(f"Loading config {path}...")
        from_file = load_config(path)
        unknown = set(from_file) - set(config)
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        config.update(from_file)
    config.update({key: value for key, value in overrides.items() if value is not None})
    validate_config(config)
    return config


def validate_config(config: Config):
    for key in ("depth", "modal_uses", "fresh", "pool_extra", "seed"):
        if not isinstance(config[key], int) or isinstance(config[key], bool):
            raise ConfigError(f"{key} must be an integer")
        if config[key] < 0:
            raise ConfigError(f"{key} must be nonnegative")
    if config["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
    parse_frames(config["frames"])


def budget_from(config: Config) -> SearchBudget:
    return SearchBudget(config["depth"], config["modal_uses"], config["fresh"])


def read_input(source: str) -> str:
    """Literal text, ``-`` for stdin, or the contents of an existing file."""
    if source == "-":
        return sys.stdin.read()
    if os.path.isfile(source):
        return read_text(source)
    return source
