"""Layered run configuration.

Precedence, highest first: explicit CLI flag, EDGEBOT_<KEY> environment
variable, key=value config file line, built-in default. Config files use
one `key = value` pair per line; `#` starts a comment.
"""

from __future__ import annotations

import os
from typing import Callable, Optional

ENV_PREFIX = "EDGEBOT_"


def load_config(path: Optional[str]) -> dict[str, str]:
    if not path:
        return {}
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line is not key=value: {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            values[key.strip().lower()] = value.strip()
    return values


def resolve(
    name: str,
    cli_value,
    cfg: dict[str, str],
    cast: Callable = str,
    default=None,
):
    """Pick the effective value for one layered setting."""
    if cli_value is not None:
        return cli_value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        return cast(env)
    if name in cfg:
        return cast(cfg[name])
    return default
