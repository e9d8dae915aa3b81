"""Hindsight modular reflection.

A failed episode is cut at its Finish=Yes steps. Each finished sub-goal
gets a low-level reflection written as if that sub-goal had been the whole
task; the sequence of proposed goals gets one high-level reflection. The
full-trajectory (Reflexion-style) and raw-trajectory (retry) variants used
by the ablations live here too.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Sequence

from .backend import CompletionRequest, Completer
from .core import (
    DEFAULT_REFLECTION_CAP,
    GOAL_FINISHED,
    LEVEL_FULL,
    LEVEL_HIGH,
    LEVEL_LOW,
    LEVEL_TRAJECTORY,
    Episode,
    Goal,
    LongTermMemory,
    Reflection,
    Step,
    Tag,
    Trajectory,
)
from .errors import ParseError
from .promptkit import ReflectionExemplar, render_steps, render_trajectory, strip_tag_echo

log = logging.getLogger(__name__)

SENTINEL = "Nothing to reflect."

_MAYBE_CORRECT = (
    "The steps may already have been right, in which case there is nothing to reflect on; "
    f'if so, answer exactly "{SENTINEL}"'
)
_LOW_INTRO = (
    "Below is part of an earlier attempt. The objective was one sub-goal of a larger task. "
    "In one or two sentences, name the mistake made while pursuing the objective and what to do instead next time. "
    + _MAYBE_CORRECT
)
_HIGH_INTRO = (
    "Below are the sub-goals proposed, in order, during an earlier attempt at a task that failed. "
    "In one or two sentences, say which sub-goal choice was wrong or missing and what sequence of sub-goals "
    "to propose next time. " + _MAYBE_CORRECT
)
_FULL_INTRO = (
    "Below is an earlier attempt at a task that failed. In one or two sentences, diagnose the cause of the "
    "failure and give a concrete plan for the next attempt."
)


@dataclass(frozen=True)
class SubTrajectory:
    goal: Goal
    steps: tuple[Step, ...]

    @property
    def finished(self) -> bool:
        return bool(self.steps) and self.steps[-1].is_finish_yes

    @property
    def n_actions(self) -> int:
        return sum(s.tag is Tag.ACTION for s in self.steps)


def segment_by_finish(trajectory: Trajectory) -> list[SubTrajectory]:
    """Partition the steps at every Finish=Yes; a non-empty tail becomes the last segment."""
    by_start = {g.proposed_at: g for g in trajectory.goals}
    segments: list[SubTrajectory] = []
    current: list[Step] = []

    def close() -> None:
        first = current[0]
        goal = by_start.get(first.index)
        if goal is None:
            i = len(segments)
            goal = trajectory.goals[i] if i < len(trajectory.goals) else Goal(i, "(unknown goal)", proposed_at=first.index)
        segments.append(SubTrajectory(goal, tuple(current)))

    for step in trajectory.steps:
        current.append(step)
        if step.is_finish_yes:
            close()
            current = []
    if current:
        close()
    return segments


def clip_reflection(text: str, cap: int = DEFAULT_REFLECTION_CAP) -> str:
    """Collapse whitespace; if over ``cap``, cut back to the last sentence end that fits."""
    text = " ".join(_LABEL_ECHO.sub("", strip_tag_echo(text), count=1).split())
    if len(text) <= cap:
        return text
    head = text[:cap]
    ends = [m.end() for m in re.finditer(r"[.!?](?=\s|$)", head)]
    if ends:
        return head[: ends[-1]]
    space = head.rfind(" ")
    return head[:space] if space > 0 else head


_LABEL_ECHO = re.compile(r"^\s*\[?reflection\]?\s*:?\s*", re.IGNORECASE)


def is_sentinel(text: str) -> bool:
    # the prompt ends in "Reflection:", which models sometimes echo
    text = _LABEL_ECHO.sub("", text, count=1)
    return " ".join(text.split()).lower().startswith(SENTINEL[:-1].lower())


def _exemplar_block(ex: ReflectionExemplar, label: str) -> str:
    return f"{label}: {ex.objective}\n{ex.trajectory}\nReflection: {ex.reflection}"


def _ask(completer: Completer, prompt: str, role: str) -> str:
    return completer.complete(CompletionRequest(prompt, role_hint=role)).text


def low_prompt(segment: SubTrajectory, exemplars: Sequence[ReflectionExemplar] = (), tagged: bool = True) -> str:
    shots = [_exemplar_block(e, "Objective") for e in exemplars if e.level == LEVEL_LOW]
    parts = [_LOW_INTRO, *shots, f"Objective: {segment.goal.text}\n{render_steps(segment.steps, tagged)}\nReflection:"]
    return "\n\n".join(parts)


def _goal_lines(goals: Sequence[Goal]) -> str:
    status = {GOAL_FINISHED: "finished"}
    return "\n".join(
        f"{i}. {g.text} ({status.get(g.status, 'not finished when the attempt ended')})"
        for i, g in enumerate(goals, 1)
    )


def high_prompt(task: str, goals: Sequence[Goal], outcome: str, exemplars: Sequence[ReflectionExemplar] = ()) -> str:
    shots = [_exemplar_block(e, "Task") for e in exemplars if e.level == LEVEL_HIGH]
    query = f"Task: {task}\nSub-goals:\n{_goal_lines(goals)}\nOutcome: {outcome}\nReflection:"
    return "\n\n".join([_HIGH_INTRO, *shots, query])


def full_prompt(task: str, trajectory: Trajectory, exemplars: Sequence[ReflectionExemplar] = (), tagged: bool = True) -> str:
    shots = [_exemplar_block(e, "Task") for e in exemplars if e.level in (LEVEL_LOW, LEVEL_FULL)]
    query = f"Task: {task}\n{render_trajectory(trajectory, tagged)}\nReflection:"
    return "\n\n".join([_FULL_INTRO, *shots, query])


def reflect_low(
    segment: SubTrajectory,
    backend: Completer,
    *,
    source_episode: int,
    source_scenario: str,
    exemplars: Sequence[ReflectionExemplar] = (),
    cap: int = DEFAULT_REFLECTION_CAP,
    tagged: bool = True,
) -> Reflection | None:
    """Reflect on one sub-goal segment; None when skipped or the model has nothing to say."""
    if segment.n_actions == 0:
        log.warning("skipping low-level reflection on goal %r: no actions were taken", segment.goal.text)
        return None
    text = _ask(backend, low_prompt(segment, exemplars, tagged), "reflect_low")
    if is_sentinel(text):
        return None
    body = clip_reflection(text, cap)
    if not body:
        log.warning("empty low-level reflection for goal %r dropped", segment.goal.text)
        return None
    return Reflection(LEVEL_LOW, body, source_episode, source_scenario, goal_text=segment.goal.text)


def reflect_high(
    goals: Sequence[Goal],
    outcome: str,
    backend: Completer,
    *,
    task: str,
    source_episode: int,
    source_scenario: str,
    exemplars: Sequence[ReflectionExemplar] = (),
    cap: int = DEFAULT_REFLECTION_CAP,
) -> Reflection:
    if not goals:
        raise ValueError("high-level reflection needs at least one goal")
    if outcome == "success":
        raise ValueError("high-level reflection runs on failed episodes only")
    body = clip_reflection(_ask(backend, high_prompt(task, goals, outcome, exemplars), "reflect_high"), cap)
    if not body:
        raise ParseError("empty high-level reflection")
    return Reflection(LEVEL_HIGH, body, source_episode, source_scenario)


def run_hmr(
    episode: Episode,
    backend: Completer,
    *,
    task: str,
    exemplars: Sequence[ReflectionExemplar] = (),
    cap: int = DEFAULT_REFLECTION_CAP,
    include_tail: bool = False,
    tagged: bool = True,
) -> list[Reflection]:
    """n low-level reflections (one per finished goal, minus sentinel drops) plus one high-level.

    Any backend error propagates and nothing is returned for the episode.
    """
    if episode.success:
        raise ValueError("HMR runs on failed episodes only")
    segments = segment_by_finish(episode.trajectory)
    targets = [s for s in segments if s.finished]
    if include_tail and segments and not segments[-1].finished:
        targets.append(segments[-1])
    src = dict(source_episode=episode.episode_index, source_scenario=episode.scenario_id)
    out = []
    for seg in targets:
        r = reflect_low(seg, backend, exemplars=exemplars, cap=cap, tagged=tagged, **src)
        if r is not None:
            out.append(r)
    goals = episode.trajectory.goals
    if not goals:
        # parse failure before any goal: reflect on the empty plan itself
        goals = (Goal(0, "(no goal was proposed)", proposed_at=0),)
    out.append(reflect_high(goals, episode.outcome, backend, task=task, exemplars=exemplars, cap=cap, **src))
    return out


def reflect_full(
    episode: Episode,
    backend: Completer,
    *,
    task: str,
    exemplars: Sequence[ReflectionExemplar] = (),
    cap: int = DEFAULT_REFLECTION_CAP,
    tagged: bool = True,
) -> Reflection:
    if episode.success:
        raise ValueError("reflection runs on failed episodes only")
    text = _ask(backend, full_prompt(task, episode.trajectory, exemplars, tagged), "reflect_full")
    body = clip_reflection(text, cap)
    if not body:
        raise ParseError("empty full-trajectory reflection")
    return Reflection(LEVEL_FULL, body, episode.episode_index, episode.scenario_id)


def trajectory_entry(episode: Episode, tagged: bool = True) -> Reflection:
    """Retry ablation: keep the failed trajectory itself, unsummarised."""
    body = render_trajectory(episode.trajectory, tagged) or "(the attempt produced no steps)"
    return Reflection(LEVEL_TRAJECTORY, body, episode.episode_index, episode.scenario_id)


_ROUTES = {
    Tag.GOAL: {LEVEL_HIGH, LEVEL_FULL, LEVEL_TRAJECTORY},
    Tag.THINK: {LEVEL_LOW, LEVEL_FULL, LEVEL_TRAJECTORY},
    Tag.ACTION: {LEVEL_LOW, LEVEL_FULL, LEVEL_TRAJECTORY},
    Tag.FINISH: set(),
}


def route_reflections(memory: LongTermMemory, cue: Tag | None) -> list[Reflection]:
    """Entries relevant to a cue, in memory order. ``cue=None`` (untagged turns) gets everything."""
    if cue is None:
        return list(memory.reflections)
    levels = _ROUTES[cue]
    return [r for r in memory.reflections if r.level in levels]
