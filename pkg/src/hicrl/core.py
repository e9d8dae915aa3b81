"""Domain types shared by every module, plus the long-term memory container.

All values are frozen dataclasses; "mutators" return new instances so
they can be handed across scenario workers without copying.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence


class Tag(str, enum.Enum):
    GOAL = "[Goal]"
    THINK = "[Think]"
    ACTION = "[Action]"
    FINISH = "[Finish]"

    @property
    def word(self) -> str:
        return self.value[1:-1]

    @classmethod
    def parse(cls, text: str) -> Tag:
        for tag in cls:
            if text == tag.value or text == tag.word or text == tag.name:
                return tag
        raise ValueError(f"unknown tag: {text!r}")

    def __str__(self) -> str:
        return self.value


GOAL_ACTIVE = "active"
GOAL_FINISHED = "finished"
GOAL_OPEN = "open-at-termination"
GOAL_STATUSES = (GOAL_ACTIVE, GOAL_FINISHED, GOAL_OPEN)

OUTCOMES = ("success", "failure", "truncated")

LEVEL_LOW = "low"
LEVEL_HIGH = "high"
LEVEL_FULL = "full"
# past failed trajectory kept verbatim (retry ablation); exempt from the body cap
LEVEL_TRAJECTORY = "trajectory"
LEVELS = (LEVEL_LOW, LEVEL_HIGH, LEVEL_FULL, LEVEL_TRAJECTORY)

DEFAULT_REFLECTION_CAP = 320
DEFAULT_MEMORY_BUDGET = 12


@dataclass(frozen=True)
class Step:
    index: int
    tag: Tag
    content: str
    observation: str | None = None
    # raw completion text, kept for audit when parsing normalised it (Finish)
    raw: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.tag, Tag):
            object.__setattr__(self, "tag", Tag.parse(self.tag))
        if self.index < 0:
            raise ValueError("step index must be >= 0")
        if not self.content or not self.content.strip():
            raise ValueError("step content must be non-empty")
        if (self.tag is Tag.ACTION) != (self.observation is not None):
            raise ValueError("observation must be present exactly on Action steps")

    @property
    def is_finish_yes(self) -> bool:
        return self.tag is Tag.FINISH and self.content == "Yes"


@dataclass(frozen=True)
class Goal:
    id: int
    text: str
    status: str = GOAL_ACTIVE
    proposed_at: int = 0

    def __post_init__(self) -> None:
        if self.status not in GOAL_STATUSES:
            raise ValueError(f"bad goal status {self.status!r}")
        if not self.text.strip():
            raise ValueError("goal text must be non-empty")

    def _close(self, status: str) -> Goal:
        if self.status != GOAL_ACTIVE:
            raise ValueError(f"goal {self.id} is {self.status}, not active")
        return replace(self, status=status)

    def finish(self) -> Goal:
        return self._close(GOAL_FINISHED)

    def leave_open(self) -> Goal:
        return self._close(GOAL_OPEN)


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[Step, ...] = ()
    goals: tuple[Goal, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "goals", tuple(self.goals))
        for i, step in enumerate(self.steps):
            if step.index != i:
                raise ValueError(f"step indices must be contiguous from 0 (got {step.index} at {i})")
        if sum(g.status == GOAL_ACTIVE for g in self.goals) > 1:
            raise ValueError("at most one goal may be active")

    def __len__(self) -> int:
        return len(self.steps)

    def add(self, tag: Tag, content: str, observation: str | None = None, raw: str | None = None) -> Trajectory:
        step = Step(len(self.steps), tag, content, observation, raw)
        return Trajectory(self.steps + (step,), self.goals)

    def with_goals(self, goals: Iterable[Goal]) -> Trajectory:
        return Trajectory(self.steps, tuple(goals))

    @property
    def active_goal(self) -> Goal | None:
        for goal in self.goals:
            if goal.status == GOAL_ACTIVE:
                return goal
        return None

    @property
    def tags(self) -> list[Tag]:
        return [s.tag for s in self.steps]

    def last_finish_yes(self) -> int:
        """Index of the last Finish=Yes step, or -1."""
        for step in reversed(self.steps):
            if step.is_finish_yes:
                return step.index
        return -1

    def since_last_finished(self) -> tuple[Step, ...]:
        return self.steps[self.last_finish_yes() + 1:]

    @property
    def n_actions(self) -> int:
        return sum(s.tag is Tag.ACTION for s in self.steps)


# transitions of the tag grammar (Goal Think (Action Finish)*)+, prefix-closed
_GRAMMAR = {
    None: {Tag.GOAL},
    Tag.GOAL: {Tag.THINK},
    Tag.THINK: {Tag.ACTION, Tag.GOAL},
    Tag.ACTION: {Tag.FINISH},
    Tag.FINISH: {Tag.ACTION, Tag.GOAL},
}


def grammar_violations(steps: Sequence[Step], strict: bool = False) -> list[str]:
    """Return human-readable violations of the tag grammar (empty if valid).

    Any prefix of a word in ``(Goal Think (Action Finish)*)+`` is accepted,
    since an episode may terminate anywhere. With ``strict`` the Finish
    verdict is also honoured: a new Goal only follows Finish=Yes, an Action
    only follows Think or Finish=No.
    """
    problems = []
    prev: Step | None = None
    for step in steps:
        allowed = _GRAMMAR[prev.tag if prev else None]
        if strict and prev is not None:
            if prev.tag is Tag.THINK:
                allowed = {Tag.ACTION}
            elif prev.tag is Tag.FINISH:
                allowed = {Tag.GOAL} if prev.is_finish_yes else {Tag.ACTION}
        if step.tag not in allowed:
            before = prev.tag.value if prev else "start"
            problems.append(f"step {step.index}: {step.tag.value} after {before}")
        prev = step
    return problems


@dataclass(frozen=True)
class Episode:
    scenario_id: str
    trajectory: Trajectory
    outcome: str
    reward: float
    episode_index: int = 1
    error: str | None = None
    task_type: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.outcome not in OUTCOMES:
            raise ValueError(f"bad outcome {self.outcome!r}")
        if self.episode_index < 1:
            raise ValueError("episode_index is 1-based")

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    def discounted_return(self, gamma: float = 1.0) -> float:
        # sparse terminal reward arrives on the last environment step
        t = max(self.trajectory.n_actions - 1, 0)
        return (gamma ** t) * self.reward


@dataclass(frozen=True)
class Reflection:
    level: str
    body: str
    source_episode: int
    source_scenario: str
    goal_text: str | None = None

    def __post_init__(self) -> None:
        if self.level not in LEVELS:
            raise ValueError(f"bad reflection level {self.level!r}")
        if (self.level == LEVEL_LOW) != (self.goal_text is not None):
            raise ValueError("goal_text is present exactly on low-level reflections")
        if not self.body.strip():
            raise ValueError("reflection body must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "goal_text": self.goal_text,
            "body": self.body,
            "source_episode": self.source_episode,
            "source_scenario": self.source_scenario,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Reflection:
        return cls(
            level=d["level"],
            body=d["body"],
            source_episode=int(d["source_episode"]),
            source_scenario=d["source_scenario"],
            goal_text=d.get("goal_text"),
        )


@dataclass(frozen=True)
class LongTermMemory:
    reflections: tuple[Reflection, ...] = ()
    budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "reflections", tuple(self.reflections))
        if self.budget < 1:
            raise ValueError("memory budget must be >= 1")

    def __len__(self) -> int:
        return len(self.reflections)

    def __iter__(self):
        return iter(self.reflections)


def record_reflections(memory: LongTermMemory, new: Iterable[Reflection]) -> LongTermMemory:
    """Append ``new`` and evict whole oldest episodes until within budget."""
    entries = list(memory.reflections) + list(new)
    while len(entries) > memory.budget:
        episodes = {(r.source_scenario, r.source_episode) for r in entries}
        if len(episodes) <= 1:
            # one episode alone overflows: keep its newest entries
            entries = entries[-memory.budget:]
            break
        oldest = min(entries, key=lambda r: r.source_episode)
        key = (oldest.source_scenario, oldest.source_episode)
        entries = [r for r in entries if (r.source_scenario, r.source_episode) != key]
    return LongTermMemory(tuple(entries), memory.budget)


@dataclass(frozen=True)
class FewShotExample:
    env_id: str
    task_type: str
    task: str
    body: str
    meta: dict[str, Any] = field(default_factory=dict, compare=False)


# -- JSON Lines ---------------------------------------------------------------

def step_to_dict(step: Step) -> dict[str, Any]:
    d: dict[str, Any] = {
        "index": step.index,
        "tag": step.tag.value,
        "content": step.content,
        "observation": step.observation,
    }
    if step.raw is not None:
        d["raw"] = step.raw
    return d


def step_from_dict(d: dict[str, Any]) -> Step:
    return Step(int(d["index"]), Tag.parse(d["tag"]), d["content"], d.get("observation"), d.get("raw"))


def goal_to_dict(goal: Goal) -> dict[str, Any]:
    return {"id": goal.id, "text": goal.text, "status": goal.status, "proposed_at": goal.proposed_at}


def goal_from_dict(d: dict[str, Any]) -> Goal:
    return Goal(int(d["id"]), d["text"], d["status"], int(d["proposed_at"]))


def episode_records(episode: Episode) -> list[dict[str, Any]]:
    """One object per step, then a trailing episode object."""
    head = {"scenario": episode.scenario_id, "episode": episode.episode_index}
    records = [{"kind": "step", **head, **step_to_dict(s)} for s in episode.trajectory.steps]
    records.append(
        {
            "kind": "episode",
            **head,
            "task_type": episode.task_type,
            "outcome": episode.outcome,
            "reward": episode.reward,
            "goals": [goal_to_dict(g) for g in episode.trajectory.goals],
            "n_steps": len(episode.trajectory.steps),
            "error": episode.error,
            "usage": {"prompt": episode.prompt_tokens, "completion": episode.completion_tokens},
        }
    )
    return records


def episode_from_records(records: Sequence[dict[str, Any]]) -> Episode:
    *step_recs, trailer = records
    if trailer.get("kind") != "episode":
        raise ValueError("episode records must end with the episode trailer")
    steps = [step_from_dict(r) for r in step_recs]
    if len(steps) != trailer.get("n_steps", len(steps)):
        raise ValueError("episode trailer step count does not match")
    usage = trailer.get("usage") or {}
    return Episode(
        scenario_id=trailer["scenario"],
        trajectory=Trajectory(tuple(steps), tuple(goal_from_dict(g) for g in trailer["goals"])),
        outcome=trailer["outcome"],
        reward=float(trailer["reward"]),
        episode_index=int(trailer["episode"]),
        error=trailer.get("error"),
        task_type=trailer.get("task_type"),
        prompt_tokens=int(usage.get("prompt", 0)),
        completion_tokens=int(usage.get("completion", 0)),
    )


def dumps_jsonl(records: Iterable[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)


def episode_to_jsonl(episode: Episode) -> str:
    return dumps_jsonl(episode_records(episode))


def episodes_from_jsonl(text: str) -> list[Episode]:
    episodes, pending = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("kind") not in ("step", "episode"):
            continue  # run-level records (scenario status) live alongside episodes
        pending.append(rec)
        if rec.get("kind") == "episode":
            episodes.append(episode_from_records(pending))
            pending = []
    if pending:
        raise ValueError("trailing step records without an episode trailer")
    return episodes
