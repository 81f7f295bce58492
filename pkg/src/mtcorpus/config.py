"""Run configuration: language profiles, TOML config files, env overrides.

Precedence, lowest to highest: built-ins, profile defaults, config file,
MTCORPUS_* environment variables, explicit CLI flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .clients import ENV_CACHE, ENV_ENDPOINT

PROFILE_DEFAULTS = {
    "id": {"min_tokens": 3, "max_tokens": 250},
    "ta": {"min_tokens": 4, "max_tokens": 150},
}


@dataclass(frozen=True)
class RunConfig:
    profile: str = "id"
    min_tokens: int = 3
    max_tokens: int = 250
    ratio_cap: float = 2.0
    iqr_k: float = 3.0
    vocab_size: int = 50257
    context: int = 1024
    endpoint: str | None = None
    cache_dir: str | None = None


def _load_toml(path) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for k, v in data.items():
        key = k.replace("-", "_")
        if key not in known:
            raise ValueError(f"{path}: unknown config key {k!r}")
        out[key] = v
    return out


def build_config(
    profile: str | None = None,
    config_path=None,
    overrides: dict | None = None,
) -> RunConfig:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    file_values = _load_toml(config_path) if config_path else {}
    chosen = overrides.get("profile") or file_values.get("profile") or profile or "id"
    if chosen not in PROFILE_DEFAULTS:
        raise ValueError(
            f"unknown profile {chosen!r}; expected one of {sorted(PROFILE_DEFAULTS)}"
        )
    values: dict = {"profile": chosen, **PROFILE_DEFAULTS[chosen]}
    values.update(file_values)
    if os.environ.get(ENV_ENDPOINT):
        values["endpoint"] = os.environ[ENV_ENDPOINT]
    if os.environ.get(ENV_CACHE):
        values["cache_dir"] = os.environ[ENV_CACHE]
    values.update(overrides)
    values["profile"] = chosen
    return RunConfig(**values)
