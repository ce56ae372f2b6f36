"""Runtime configuration from environment variables.

Everything lives under MAGNET_*; there is no config file. The store
path is a directory that holds the registry copy, the last harvest
result, and the request store.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .harvester import DEFAULT_HARVEST_CAP


class ConfigError(Exception):
    pass


@dataclass
class AppConfig:
    endpoint: str = "https://api.openalex.org"
    tracker_url: str | None = None
    tracker_token: str | None = None
    store_path: Path = Path("magnet-data")
    host: str = "127.0.0.1"
    port: int = 8840
    harvest_cap: int = DEFAULT_HARVEST_CAP
    max_harvests: int = 2
    queue_limit: int = 100
    mailto: str | None = None
    webapp_dir: Path | None = None

    @property
    def registry_path(self) -> Path:
        return self.store_path / "registry.jsonl"

    @property
    def harvest_path(self) -> Path:
        return self.store_path / "harvest.json"

    @property
    def requests_path(self) -> Path:
        return self.store_path / "requests"


def _int_var(env, name: str, default: int) -> int:
    value = env.get(name)
    if not value:
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {value!r}") from exc


def load_config(env=None) -> AppConfig:
    env = os.environ if env is None else env
    config = AppConfig()
    if env.get("MAGNET_ENDPOINT"):
        config.endpoint = env["MAGNET_ENDPOINT"]
    if env.get("MAGNET_TRACKER_URL"):
        config.tracker_url = env["MAGNET_TRACKER_URL"]
    if env.get("MAGNET_TRACKER_TOKEN"):
        config.tracker_token = env["MAGNET_TRACKER_TOKEN"]
    if env.get("MAGNET_STORE_PATH"):
        config.store_path = Path(env["MAGNET_STORE_PATH"])
    if env.get("MAGNET_HOST"):
        config.host = env["MAGNET_HOST"]
    if env.get("MAGNET_MAILTO"):
        config.mailto = env["MAGNET_MAILTO"]
    if env.get("MAGNET_WEBAPP_DIR"):
        config.webapp_dir = Path(env["MAGNET_WEBAPP_DIR"])
    config.port = _int_var(env, "MAGNET_PORT", config.port)
    config.harvest_cap = _int_var(env, "MAGNET_HARVEST_CAP", config.harvest_cap)
    config.max_harvests = _int_var(env, "MAGNET_MAX_HARVESTS", config.max_harvests)
    config.queue_limit = _int_var(env, "MAGNET_QUEUE_LIMIT", config.queue_limit)
    return config


__all__ = ["AppConfig", "ConfigError", "load_config"]
