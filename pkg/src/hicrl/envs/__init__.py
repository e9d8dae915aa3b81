"""Deterministic text environments."""

from __future__ import annotations

from ..errors import UnknownEnv
from .base import (
    ENV_IDS,
    NOTHING,
    Scenario,
    StepResult,
    TextEnv,
    bundled_scenarios,
    get_scenario,
    load_pack_file,
    minishop_score,
    miniwiki_normalize,
)
from .minihouse import MiniHouse
from .minishop import MiniShop
from .miniwiki import MiniWiki

_ENVS = {"minihouse": MiniHouse, "minishop": MiniShop, "miniwiki": MiniWiki}


def make_env(env_id: str) -> TextEnv:
    """A fresh environment instance; instances share no mutable state."""
    try:
        return _ENVS[env_id]()
    except KeyError:
        raise UnknownEnv(f"unknown env {env_id!r}; choose from {', '.join(ENV_IDS)}") from None


__all__ = [
    "ENV_IDS", "NOTHING", "MiniHouse", "MiniShop", "MiniWiki", "Scenario", "StepResult", "TextEnv",
    "bundled_scenarios", "get_scenario", "load_pack_file", "make_env", "minishop_score", "miniwiki_normalize",
]
