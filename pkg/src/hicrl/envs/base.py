"""Environment interface, scenario packs and shared helpers."""

from __future__ import annotations

import copy
import json
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from ..errors import AlreadyDone, BadSeed, NotReset, UnknownEnv

ENV_IDS = ("minihouse", "minishop", "miniwiki")
NOTHING = "Nothing happens."


@dataclass(frozen=True)
class Scenario:
    env_id: str
    seed: int
    task_text: str
    task_type: str
    gold: dict[str, Any]
    world: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)
    # list of {"goal": str, "actions": [str, ...]}
    oracle: tuple[dict[str, Any], ...] = ()

    @property
    def scenario_id(self) -> str:
        return f"{self.env_id}-{self.seed:03d}"

    @property
    def oracle_actions(self) -> list[str]:
        return [a for seg in self.oracle for a in seg["actions"]]

    def to_dict(self, include_world: bool = True) -> dict[str, Any]:
        d = {
            "seed": self.seed,
            "task_type": self.task_type,
            "task_text": self.task_text,
            "gold": self.gold,
            "oracle": list(self.oracle),
        }
        if include_world:
            d["world"] = self.world
        return d


@dataclass(frozen=True)
class StepResult:
    observation: str
    reward: float = 0.0
    done: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.reward <= 1.0:
            raise ValueError("reward must lie in [0, 1]")
        if self.reward > 0 and not self.done:
            raise ValueError("reward is only paid on the terminal step")

    @property
    def won(self) -> bool:
        return self.done and self.reward >= 1.0


class TextEnv:
    """Base class: subclasses implement ``_build``, ``_observe_start`` and ``_apply``.

    ``_apply`` returns ``(observation, reward, done)`` and must leave the state
    untouched whenever it answers ``NOTHING``.
    """

    env_id = ""

    def __init__(self) -> None:
        self.scenario: Scenario | None = None
        self.done = False
        self.state: dict[str, Any] = {}

    def reset(self, scenario: Scenario) -> str:
        if scenario.env_id != self.env_id:
            raise UnknownEnv(f"{type(self).__name__} cannot run {scenario.env_id!r} scenarios")
        if not isinstance(scenario.seed, int) or scenario.seed < 0:
            raise BadSeed(f"bad seed {scenario.seed!r}")
        self.scenario = scenario
        self.done = False
        self.state = self._build(scenario)
        return self._observe_start()

    def step(self, action: str) -> StepResult:
        if self.scenario is None:
            raise NotReset("call reset() before step()")
        if self.done:
            raise AlreadyDone("episode already finished")
        obs, reward, done = self._apply(normalize_command(action))
        self.done = done
        return StepResult(obs, reward, done)

    def snapshot(self) -> str:
        """Canonical serialisation of the mutable world state."""
        return json.dumps(self.state, sort_keys=True)

    def _build(self, scenario: Scenario) -> dict[str, Any]:
        raise NotImplementedError

    def _observe_start(self) -> str:
        raise NotImplementedError

    def _apply(self, action: str) -> tuple[str, float, bool]:
        raise NotImplementedError


def normalize_command(action: str) -> str:
    action = " ".join(action.strip().split())
    return action[:-1] if action.endswith(".") and "[" not in action else action


_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


def miniwiki_normalize(answer: str) -> str:
    """Lowercase, drop punctuation and a leading article, collapse whitespace."""
    text = _PUNCT.sub(" ", answer.lower())
    words = text.split()
    if words and words[0] in ("a", "an", "the"):
        words = words[1:]
    return " ".join(words)


def minishop_score(item: dict[str, Any], selected_options: dict[str, str], gold: dict[str, Any]) -> float:
    """Fraction of gold constraints met: category, each attribute, each option, price cap."""
    checks = [item["category"] == gold["category"]]
    checks += [a in item["attributes"] for a in gold["attributes"]]
    checks += [selected_options.get(group) == value for group, value in gold["options"].items()]
    checks.append(item["price"] <= gold["price_max"])
    return sum(checks) / len(checks)


# -- packs -------------------------------------------------------------------

def scenarios_from_pack(pack: dict[str, Any]) -> list[Scenario]:
    """Build scenarios from a pack dict; ``shared`` world entries merge into every scenario."""
    env_id = pack["env_id"]
    if env_id not in ENV_IDS:
        raise UnknownEnv(f"unknown env {env_id!r}")
    shared = pack.get("shared", {})
    out = []
    for entry in pack["scenarios"]:
        world = {**shared, **entry.get("world", {})}
        out.append(
            Scenario(
                env_id=env_id,
                seed=int(entry["seed"]),
                task_text=entry["task_text"],
                task_type=entry["task_type"],
                gold=entry["gold"],
                world=world,
                oracle=tuple(entry.get("oracle", ())),
            )
        )
    return out


def load_pack_file(path: str | Path) -> list[Scenario]:
    with open(path, encoding="utf-8") as fh:
        return scenarios_from_pack(json.load(fh))


@lru_cache(maxsize=None)
def _bundled(env_id: str) -> tuple[Scenario, ...]:
    text = resources.files("hicrl").joinpath("data").joinpath("packs").joinpath(f"{env_id}.json").read_text(encoding="utf-8")
    return tuple(scenarios_from_pack(json.loads(text)))


def bundled_scenarios(env_id: str) -> list[Scenario]:
    if env_id not in ENV_IDS:
        raise UnknownEnv(f"unknown env {env_id!r}")
    return list(_bundled(env_id))


def get_scenario(env_id: str, seed: int) -> Scenario:
    for sc in bundled_scenarios(env_id):
        if sc.seed == seed:
            return sc
    raise BadSeed(f"no bundled {env_id} scenario with seed {seed}")


def deep(obj: Any) -> Any:
    return copy.deepcopy(obj)
