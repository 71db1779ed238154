"""Deployment configuration (JSON).

Example::

    {
      "graphs": {"arabidopsis": "data/arabidopsis.nt"},
      "catalog": "views.json",
      "credentials": {"admin": "<64 hex chars>", "alice": "<64 hex chars>"},
      "super_users": ["admin"],
      "chain": "chain.bin",
      "block_size": 100,
      "flush_interval": 1.0,
      "prefixes": {"ex": "http://example.org/"}
    }

Relative paths resolve against the config file's directory. ``credentials``
may instead be a path to a JSON file holding the same mapping.
"""

from __future__ import annotations

import json
import os
import re
import secrets
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .ntriples import DEFAULT_PREFIXES

ENV_CONFIG = "VIEWGATE_CONFIG"
ENV_LISTEN = "VIEWGATE_LISTEN"
DEFAULT_LISTEN = "127.0.0.1:3030"

_TOKEN = re.compile(r"^[0-9a-fA-F]{32,}$")


class ConfigError(ValueError):
    pass


def new_token() -> str:
    return secrets.token_hex(32)


@dataclass
class Config:
    graphs: Dict[str, str]
    credentials: Dict[str, str]
    super_users: List[str]
    chain: str
    catalog: Optional[str] = None
    block_size: int = 100
    flush_interval: float = 1.0
    prefixes: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_PREFIXES))
    path: Optional[str] = None
    credentials_file: Optional[str] = None

    def __post_init__(self):
        if not self.super_users:
            raise ConfigError("at least one super-user is required")
        for user, token in self.credentials.items():
            if not isinstance(token, str) or not _TOKEN.match(token):
                raise ConfigError(f"token for {user!r} must be at least 32 hex characters")
        missing = [u for u in self.super_users if u not in self.credentials]
        if missing:
            raise ConfigError(f"super-users without credentials: {', '.join(missing)}")
        if self.block_size < 1:
            raise ConfigError("block_size must be positive")

    @property
    def node_actor(self) -> str:
        """Identity the gateway itself signs bootstrap and record transactions with."""
        return sorted(self.super_users)[0]


def _resolve(base: str, p: Optional[str]) -> Optional[str]:
    if p is None:
        return None
    return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))


def load_credentials(path: str) -> Dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("credentials file must hold a user -> token object")
    return data


def load_config(path: Optional[str] = None) -> Config:
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        raise ConfigError(f"no config file given and {ENV_CONFIG} is not set")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    base = os.path.dirname(os.path.abspath(path))
    try:
        creds = data["credentials"]
        creds_file = None
        if isinstance(creds, str):
            creds_file = _resolve(base, creds)
            creds = load_credentials(creds_file)
        prefixes = dict(DEFAULT_PREFIXES)
        prefixes.update(data.get("prefixes", {}))
        return Config(
            graphs={gid: _resolve(base, p) for gid, p in data.get("graphs", {}).items()},
            credentials=dict(creds),
            super_users=list(data["super_users"]),
            chain=_resolve(base, data["chain"]),
            catalog=_resolve(base, data.get("catalog")),
            block_size=int(data.get("block_size", 100)),
            flush_interval=float(data.get("flush_interval", 1.0)),
            prefixes=prefixes,
            path=os.path.abspath(path),
            credentials_file=creds_file,
        )
    except KeyError as e:
        raise ConfigError(f"config is missing {e}") from None


def parse_listen(value: Optional[str] = None):
    value = value or os.environ.get(ENV_LISTEN) or DEFAULT_LISTEN
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad listen address {value!r}, expected host:port")
    return host, int(port)
