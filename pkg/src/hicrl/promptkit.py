"""Prompt assembly and completion parsing.

A prompt is laid out as::

    <instruction>
    <few-shot examples>

    Lessons from past attempts:      (only when there are reflections)
    - ...

    Task: <task statement>
    <trajectory so far, one tagged line per step>
    <cue>

Steps render as ``[Tag] content``; an Action step is followed by an
``Observation:`` line. Multi-line content continues on lines indented by two
spaces so a continuation can never be mistaken for a new tag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .core import (
    LEVEL_FULL,
    LEVEL_HIGH,
    LEVEL_LOW,
    LEVEL_TRAJECTORY,
    FewShotExample,
    Goal,
    Reflection,
    Step,
    Tag,
    Trajectory,
)
from .errors import BudgetError, ParseError

DEFAULT_CHAR_BUDGET = 24_000
OBS_PREFIX = "Observation: "
CONT = "  "
LESSONS_HEADER = "Lessons from past attempts:"
EXAMPLE_SEP = "====="

INSTRUCTION_TAGGED = (
    "Solve the task one tagged step at a time. [Goal] names the next sub-goal, "
    "[Think] plans how to reach it, [Action] is one command for the environment, "
    "and [Finish] answers Yes or No to whether the current sub-goal is done. "
    "Write only the text that belongs after the last tag."
)
INSTRUCTION_FREE = (
    "Solve the task one step at a time. Start every line with goal:, think:, action: or finish: "
    "to say what kind of step it is. After each action, write finish: yes or finish: no."
)
FREE_CUE = "Next step:"

_FREE_PREFIX = {Tag.GOAL: "goal: ", Tag.THINK: "think: ", Tag.ACTION: "action: ", Tag.FINISH: "finish: "}
_TAG_LINE = re.compile(r"^\[(Goal|Think|Action|Finish)\] ?(.*)$")
_ECHO = re.compile(r"^\s*\[(goal|think|action|finish)\]\s*", re.IGNORECASE)
_FREE_LINE = re.compile(r"^\s*(?:\[)?(goal|think|action|finish)(?:\])?\s*:?\s*(.*)$", re.IGNORECASE)


# -- rendering -----------------------------------------------------------------

def _indent_rest(text: str) -> str:
    first, *rest = text.split("\n")
    return "\n".join([first] + [CONT + line for line in rest])


def render_step(step: Step, tagged: bool = True) -> str:
    head = f"{step.tag.value} " if tagged else _FREE_PREFIX[step.tag]
    out = head + _indent_rest(step.content)
    if step.observation is not None:
        out += "\n" + OBS_PREFIX + _indent_rest(step.observation)
    return out


def render_steps(steps: Sequence[Step], tagged: bool = True) -> str:
    return "\n".join(render_step(s, tagged) for s in steps)


def render_trajectory(trajectory: Trajectory, tagged: bool = True) -> str:
    return render_steps(trajectory.steps, tagged)


def parse_tagged(text: str) -> list[Step]:
    """Parse text in the tag format back into steps (inverse of render_steps)."""
    steps: list[list] = []
    field_ = None  # which part of the current step continuation lines extend
    for n, line in enumerate(text.split("\n"), 1):
        m = _TAG_LINE.match(line)
        if m:
            steps.append([Tag.parse(m.group(1)), m.group(2), None])
            field_ = 1
        elif line.startswith(OBS_PREFIX.rstrip()) and steps and steps[-1][0] is Tag.ACTION and steps[-1][2] is None:
            steps[-1][2] = line[len(OBS_PREFIX):] if line.startswith(OBS_PREFIX) else ""
            field_ = 2
        elif line.startswith(CONT) and steps and field_ is not None:
            steps[-1][field_] += "\n" + line[len(CONT):]
        elif line.strip() == "" and not steps:
            continue
        else:
            raise ParseError(f"line {n} does not follow the tag format: {line!r}")
    out = []
    for i, (tag, content, obs) in enumerate(steps):
        try:
            out.append(Step(i, tag, content, obs))
        except ValueError as exc:
            raise ParseError(f"step {i}: {exc}") from exc
    return out


# -- completion parsers -------------------------------------------------------

def strip_tag_echo(text: str) -> str:
    prev = None
    while prev != text:
        prev = text
        text = _ECHO.sub("", text, count=1)
    return text


def _first_line(text: str) -> str:
    for line in text.split("\n"):
        line = strip_tag_echo(line).strip()
        if line:
            return line
    return ""


def parse_goal(text: str) -> str:
    line = _first_line(text)
    if not line:
        raise ParseError("empty goal")
    return line


def parse_action(text: str) -> str:
    line = _first_line(text)
    if not line:
        raise ParseError("empty action")
    return line


def parse_think(text: str) -> str:
    body = strip_tag_echo(text.strip()).strip()
    if not body:
        raise ParseError("empty thought")
    return "\n".join(line.rstrip() for line in body.split("\n"))


def parse_finish(text: str) -> bool:
    m = re.search(r"[A-Za-z]+", strip_tag_echo(text))
    word = m.group(0).lower() if m else ""
    if word == "yes":
        return True
    if word == "no":
        return False
    raise ParseError(f"finish verdict is neither yes nor no: {text[:40]!r}")


def parse_free_step(text: str) -> tuple[Tag, str]:
    """Parse one untagged turn such as ``action: go to desk 1``."""
    for line in text.split("\n"):
        if not line.strip():
            continue
        m = _FREE_LINE.match(line)
        if not m:
            break
        tag = Tag.parse(m.group(1).capitalize())
        content = m.group(2).strip()
        if tag is Tag.FINISH:
            return tag, "Yes" if parse_finish(content) else "No"
        if not content:
            raise ParseError(f"empty {tag.word.lower()} step")
        return tag, content
    raise ParseError(f"no step-type prefix in {text[:40]!r}")


# -- prompt assembly ----------------------------------------------------------

@dataclass(frozen=True)
class PromptBundle:
    examples: tuple[FewShotExample, ...]
    reflections: tuple[Reflection, ...]
    task: str
    trajectory: Trajectory
    cue: Tag | None
    goal_context: Goal | None = None
    tagged: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "reflections", tuple(self.reflections))
        if self.cue is Tag.FINISH and self.goal_context is None:
            raise ValueError("a Finish cue needs goal_context")
        if self.tagged and self.cue is None:
            raise ValueError("tagged prompts need a cue")


def finish_question(goal_text: str) -> str:
    return f"Has the goal '{goal_text}' been achieved? Answer Yes or No."


def render_example(example: FewShotExample, tagged: bool = True) -> str:
    body = example.body if tagged else render_steps(parse_tagged(example.body), tagged=False)
    return f"Task: {example.task}\n{body}"


def render_reflection(r: Reflection) -> str:
    if r.level == LEVEL_TRAJECTORY:
        return f"Past attempt (episode {r.source_episode}):\n{r.body}"
    if r.level == LEVEL_LOW:
        return f"- While working on '{r.goal_text}': {r.body}"
    return f"- {r.body}"


def _segments(steps: Sequence[Step]) -> tuple[list[list[Step]], list[Step]]:
    """Split into finished sub-goal segments and the open remainder."""
    done, cur = [], []
    for s in steps:
        cur.append(s)
        if s.is_finish_yes:
            done.append(cur)
            cur = []
    return done, cur


def _elided(k: int) -> str:
    return f"…({k} earlier sub-goal{'s' if k != 1 else ''} completed)…"


def _omitted(k: int) -> str:
    return f"…({k} earlier step{'s' if k != 1 else ''} omitted)…"


@dataclass
class _Layout:
    instruction: str
    examples: list[str]
    lessons: list[str]
    task: str
    finished: list[str]  # rendered finished segments
    elided: int
    active: list[str]  # rendered steps of the open segment
    omitted: int
    cue: str
    _keep_first_active: bool = field(default=True)

    def render(self) -> str:
        parts = [self.instruction + ("\n\n" + "\n\n".join(self.examples) if self.examples else "")]
        if self.lessons:
            parts.append(LESSONS_HEADER + "\n" + "\n".join(self.lessons))
        block = [f"Task: {self.task}"]
        if self.elided:
            block.append(_elided(self.elided))
        block.extend(self.finished[self.elided:])
        if self.active:
            lead = 1 if self._keep_first_active else 0
            block.extend(self.active[:lead])
            if self.omitted:
                block.append(_omitted(self.omitted))
            block.extend(self.active[lead + self.omitted:])
        block.append(self.cue)
        parts.append("\n".join(block))
        return "\n\n".join(parts)


def assemble_prompt(bundle: PromptBundle, char_budget: int = DEFAULT_CHAR_BUDGET) -> str:
    """Lay out the prompt for ``bundle.cue`` within ``char_budget`` characters.

    Shrinks in this order until it fits: oldest finished sub-goal segments
    collapse into one marker line, few-shot examples drop from the end,
    then the oldest steps of the active segment (after its Goal line) are
    omitted. Reflections, the task, the current goal and the cue are never
    cut; if those alone overflow, BudgetError is raised.
    """
    if char_budget < 1:
        raise ValueError("char_budget must be positive")
    tagged = bundle.tagged
    steps = bundle.trajectory.steps
    if bundle.cue is Tag.FINISH:
        steps = bundle.trajectory.since_last_finished()
        cue = finish_question(bundle.goal_context.text) + "\n" + Tag.FINISH.value
    elif tagged:
        cue = bundle.cue.value
    else:
        cue = FREE_CUE
    finished, active = _segments(steps)
    layout = _Layout(
        instruction=INSTRUCTION_TAGGED if tagged else INSTRUCTION_FREE,
        examples=[render_example(e, tagged) for e in bundle.examples],
        lessons=[render_reflection(r) for r in bundle.reflections],
        task=bundle.task,
        finished=[render_steps(seg, tagged) for seg in finished],
        elided=0,
        active=[render_step(s, tagged) for s in active],
        omitted=0,
        cue=cue,
        _keep_first_active=bool(active) and active[0].tag is Tag.GOAL,
    )
    text = layout.render()
    while len(text) > char_budget and layout.elided < len(layout.finished):
        layout.elided += 1
        text = layout.render()
    while len(text) > char_budget and layout.examples:
        layout.examples.pop()
        text = layout.render()
    lead = 1 if layout._keep_first_active else 0
    while len(text) > char_budget and layout.omitted < len(layout.active) - lead:
        layout.omitted += 1
        text = layout.render()
    if len(text) > char_budget:
        raise BudgetError(f"irreducible prompt needs {len(text)} chars, budget is {char_budget}")
    return text


def split_prompt(prompt: str) -> tuple[str, str]:
    """Return (text before the task line, task-and-trajectory block)."""
    i = prompt.rfind("\n\nTask: ")
    if i == -1:
        raise ValueError("prompt has no task block")
    return prompt[:i], prompt[i + 2:]


def trajectory_lines(prompt: str) -> str:
    """The rendered trajectory of a tagged prompt: after the task, before the cue."""
    block = split_prompt(prompt)[1]
    lines = block.split("\n")
    start = next((i for i, line in enumerate(lines) if _TAG_LINE.match(line) or line.startswith("…(")), len(lines))
    end = len(lines) - 1
    if lines[end] == Tag.FINISH.value:
        end -= 1  # the finish question line
    return "\n".join(lines[start:end])


# -- bundled few-shot fixtures ----------------------------------------------

def _read_data(name: str) -> str:
    return resources.files("hicrl").joinpath("data").joinpath("fewshot").joinpath(name).read_text(encoding="utf-8")


def parse_example_file(text: str, env_id: str, task_type: str) -> list[FewShotExample]:
    examples = []
    for block in text.split("\n" + EXAMPLE_SEP + "\n"):
        block = block.strip("\n")
        if not block:
            continue
        lines = block.split("\n")
        first_tag = next(i for i, line in enumerate(lines) if _TAG_LINE.match(line))
        task = "\n".join(lines[:first_tag])
        if not task.startswith("Task: "):
            raise ValueError(f"example block for {env_id}/{task_type} must start with 'Task: '")
        body = "\n".join(lines[first_tag:])
        parse_tagged(body)  # must follow the grammar
        examples.append(FewShotExample(env_id, task_type, task[len("Task: "):], body))
    return examples


def load_examples(env_id: str, task_type: str | None = None) -> tuple[FewShotExample, ...]:
    """Bundled full-trajectory examples for an environment (and house task type)."""
    name = f"{env_id}_{task_type}.txt" if env_id == "minihouse" else f"{env_id}.txt"
    return tuple(parse_example_file(_read_data(name), env_id, task_type or env_id))


@dataclass(frozen=True)
class ReflectionExemplar:
    level: str
    objective: str
    trajectory: str
    reflection: str


def load_reflection_exemplars(env_id: str) -> tuple[ReflectionExemplar, ...]:
    """Two low-level and one high-level worked reflection per environment."""
    out = []
    for block in _read_data(f"{env_id}_reflections.txt").split("\n" + EXAMPLE_SEP + "\n"):
        block = block.strip("\n")
        if not block:
            continue
        head, _, rest = block.partition("\n")
        level = head.removeprefix("Level: ").strip()
        if level not in (LEVEL_LOW, LEVEL_HIGH, LEVEL_FULL):
            raise ValueError(f"bad exemplar level {level!r}")
        objective_line, _, rest = rest.partition("\n")
        body, _, reflection = rest.rpartition("\nReflection: ")
        out.append(ReflectionExemplar(level, objective_line.removeprefix("Objective: "), body, reflection.strip()))
    return tuple(out)
