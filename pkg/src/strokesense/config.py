"""TOML run configuration: a small validated schema shared by all CLI
subcommands. Unknown keys are rejected so typos fail loudly."""

from __future__ import annotations

import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


_INT = ("int",)
_FLOAT = ("float",)  # ints accepted
_BOOL = ("bool",)
_STR = ("str",)
_INT_LIST = ("int_list",)
_STR_LIST = ("str_list",)

SCHEMA = {
    "seed": _INT,
    "augment": {
        "windows": _INT_LIST,
        "strides": _INT_LIST,
        "noise_sigma": _FLOAT,
        "noise_copies": _INT,
        "in_place_smoothing": _BOOL,
    },
    "split": {
        "protocol": _STR,
        "test_fraction": _FLOAT,
        "train_writers": _STR_LIST,
        "test_writers": _STR_LIST,
    },
    "model": {
        "extra_dense": _BOOL,
        "hard_sigmoid_everywhere": _BOOL,
    },
    "train": {
        "learning_rate": _FLOAT,
        "rho": _FLOAT,
        "epsilon": _FLOAT,
        "batch_size": _INT,
        "max_epochs": _INT,
        "patience": _INT,
        "clip_norm": _FLOAT,
        "val_fraction": _FLOAT,
    },
}


def _check_type(path: str, value, kind) -> object:
    if kind is _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {path!r} must be an integer")
        return value
    if kind is _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {path!r} must be a number")
        return float(value)
    if kind is _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(f"config key {path!r} must be a boolean")
        return value
    if kind is _STR:
        if not isinstance(value, str):
            raise ConfigError(f"config key {path!r} must be a string")
        return value
    if kind is _INT_LIST:
        if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, int) for v in value
        ):
            raise ConfigError(f"config key {path!r} must be a list of integers")
        return list(value)
    if kind is _STR_LIST:
        if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
            raise ConfigError(f"config key {path!r} must be a list of strings")
        return list(value)
    raise AssertionError(kind)


class RunConfig:
    """Validated config values, addressed as 'section.key' (or bare 'seed')."""

    def __init__(self, values: dict[str, object]):
        self._values = values

    @classmethod
    def empty(cls) -> "RunConfig":
        return cls({})

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML in {path}: {e}") from None
        values: dict[str, object] = {}
        for key, value in raw.items():
            rule = SCHEMA.get(key)
            if rule is None:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(rule, dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"config key {key!r} must be a table")
                for sub, sub_value in value.items():
                    sub_rule = rule.get(sub)
                    if sub_rule is None:
                        raise ConfigError(f"unknown config key '{key}.{sub}'")
                    values[f"{key}.{sub}"] = _check_type(f"{key}.{sub}", sub_value, sub_rule)
            else:
                values[key] = _check_type(key, value, rule)
        return cls(values)

    def get(self, path: str, default=None):
        return self._values.get(path, default)

    def __contains__(self, path: str) -> bool:
        return path in self._values


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig.empty()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return RunConfig.load(p)
