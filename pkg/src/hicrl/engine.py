"""The tag-driven decision loop.

The engine alternates cues Goal -> Think -> Action -> Finish; a Yes from the
finisher sends control back to Goal, a No back to Action. Only Action steps
touch the environment.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

from .backend import CompletionRequest, Completer
from .core import (
    DEFAULT_MEMORY_BUDGET,
    DEFAULT_REFLECTION_CAP,
    Episode,
    FewShotExample,
    Goal,
    LongTermMemory,
    Tag,
    Trajectory,
)
from .errors import BackendError, EpisodeAborted, ParseError
from .hmr import route_reflections
from .promptkit import (
    DEFAULT_CHAR_BUDGET,
    PromptBundle,
    assemble_prompt,
    parse_action,
    parse_finish,
    parse_free_step,
    parse_goal,
    parse_think,
)

log = logging.getLogger(__name__)

MODES = ("hmr", "reflexion", "retry", "notag")
STEP_CAPS = {"minihouse": 40, "minishop": 15, "miniwiki": 12}
FINISH_ATTEMPTS = 2


class Phase(enum.Enum):
    NEED_GOAL = "NeedGoal"
    NEED_THINK = "NeedThink"
    NEED_ACTION = "NeedAction"
    NEED_FINISH = "NeedFinish"
    DONE = "Done"

    @property
    def tag(self) -> Tag | None:
        return _PHASE_TAG.get(self)


_PHASE_TAG = {
    Phase.NEED_GOAL: Tag.GOAL,
    Phase.NEED_THINK: Tag.THINK,
    Phase.NEED_ACTION: Tag.ACTION,
    Phase.NEED_FINISH: Tag.FINISH,
}


@dataclass(frozen=True)
class EngineState:
    phase: Phase = Phase.NEED_GOAL
    active_goal: Goal | None = None
    steps_taken: int = 0
    goals_proposed: int = 0

    def __post_init__(self) -> None:
        if self.phase in (Phase.NEED_THINK, Phase.NEED_ACTION, Phase.NEED_FINISH) and self.active_goal is None:
            raise ValueError(f"{self.phase.value} requires an active goal")


@dataclass(frozen=True)
class RunConfig:
    max_env_steps: int = 40
    max_goals: int = 10
    max_parse_retries: int = 3
    gamma: float = 1.0
    char_budget: int = DEFAULT_CHAR_BUDGET
    mode: str = "hmr"
    episodes: int = 5
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    reflection_cap: int = DEFAULT_REFLECTION_CAP
    include_tail: bool = False
    temperature: float = 0.0

    def __post_init__(self) -> None:
        for name in ("max_env_steps", "max_goals", "max_parse_retries", "char_budget", "episodes",
                     "memory_budget", "reflection_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @classmethod
    def for_env(cls, env_id: str, **overrides: Any) -> RunConfig:
        overrides.setdefault("max_env_steps", STEP_CAPS.get(env_id, 40))
        return cls(**overrides)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def next_cue(
    state: EngineState,
    finish_verdict: bool | None = None,
    env_done: bool = False,
    config: RunConfig = RunConfig(),
) -> Phase:
    """Phase that follows ``state.phase`` once its cue has been answered."""
    if (
        state.phase is Phase.DONE
        or env_done
        or state.steps_taken >= config.max_env_steps
        or state.goals_proposed > config.max_goals
    ):
        return Phase.DONE
    if state.phase is Phase.NEED_GOAL:
        return Phase.NEED_THINK
    if state.phase is Phase.NEED_THINK:
        return Phase.NEED_ACTION
    if state.phase is Phase.NEED_ACTION:
        return Phase.NEED_FINISH
    if finish_verdict:
        # another goal would break the goal cap
        return Phase.NEED_GOAL if state.goals_proposed < config.max_goals else Phase.DONE
    return Phase.NEED_ACTION


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass
class _Run:
    """Mutable bookkeeping for one episode; the public result is the frozen Episode."""

    scenario_id: str
    episode_index: int
    task_type: str | None
    trajectory: Trajectory = field(default_factory=Trajectory)
    goals: list[Goal] = field(default_factory=list)
    state: EngineState = field(default_factory=EngineState)
    env_done: bool = False
    reward: float = 0.0
    parse_failures: int = 0
    error: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def add_goal(self, text: str) -> Goal:
        goal = Goal(len(self.goals), text, proposed_at=len(self.trajectory))
        self.goals.append(goal)
        self.trajectory = self.trajectory.add(Tag.GOAL, text)
        return goal

    def finish_active(self) -> None:
        self.goals[-1] = self.goals[-1].finish()

    def episode(self, outcome: str) -> Episode:
        goals = [g.leave_open() if g.status == "active" else g for g in self.goals]
        return Episode(
            scenario_id=self.scenario_id,
            trajectory=self.trajectory.with_goals(goals),
            outcome=outcome,
            reward=self.reward,
            episode_index=self.episode_index,
            error=self.error,
            task_type=self.task_type,
            prompt_tokens=self.prompt_tokens,
            completion_tokens=self.completion_tokens,
        )


def run_episode(
    scenario,
    env,
    backend,
    memory: LongTermMemory | None = None,
    examples: Sequence[FewShotExample] = (),
    config: RunConfig | None = None,
    *,
    episode_index: int = 1,
) -> Episode:
    """Play one episode of ``scenario`` and return it.

    ``backend`` is either a provider (bound here to the scenario/episode) or an
    already bound completer. Backend failures raise EpisodeAborted carrying the
    truncated episode.
    """
    config = config or RunConfig.for_env(scenario.env_id)
    memory = memory or LongTermMemory(budget=config.memory_budget)
    completer: Completer = backend.bind(scenario.scenario_id, episode_index) if hasattr(backend, "bind") else backend
    tagged = config.mode != "notag"
    task = env.reset(scenario)
    run = _Run(scenario.scenario_id, episode_index, scenario.task_type)

    def ask(phase: Phase) -> str:
        cue = phase.tag if tagged else None
        bundle = PromptBundle(
            examples=tuple(examples),
            reflections=tuple(route_reflections(memory, cue)),
            task=task,
            trajectory=run.trajectory,
            cue=cue,
            goal_context=run.state.active_goal if cue is Tag.FINISH else None,
            tagged=tagged,
        )
        prompt = assemble_prompt(bundle, config.char_budget)
        request = CompletionRequest(prompt, role_hint=phase.tag.word.lower(), temperature=config.temperature)
        response = completer.complete(request)
        run.prompt_tokens += response.prompt_tokens
        run.completion_tokens += response.completion_tokens
        log.info(json.dumps({
            "scenario": run.scenario_id, "episode": episode_index, "cue": phase.value,
            "prompt_sha": _digest(prompt), "response_sha": _digest(response.text),
        }))
        return response.text

    def parsed(phase: Phase, text: str) -> str:
        if tagged:
            parser = {Phase.NEED_GOAL: parse_goal, Phase.NEED_THINK: parse_think, Phase.NEED_ACTION: parse_action}
            if phase is Phase.NEED_FINISH:
                return "Yes" if parse_finish(text) else "No"
            return parser[phase](text)
        tag, content = parse_free_step(text)
        if tag is not phase.tag:
            raise ParseError(f"expected a {phase.tag.word.lower()} step, got {tag.word.lower()}")
        return content

    outcome = None
    try:
        while run.state.phase is not Phase.DONE:
            phase = run.state.phase
            state = run.state
            if phase is Phase.NEED_FINISH:
                raw = ask(phase)
                try:
                    verdict = parsed(phase, raw) == "Yes"
                except ParseError:
                    raw = ask(phase)
                    try:
                        verdict = parsed(phase, raw) == "Yes"
                    except ParseError:
                        log.warning("finish verdict unparseable twice; treating as No")
                        verdict = False
                run.trajectory = run.trajectory.add(Tag.FINISH, "Yes" if verdict else "No", raw=raw)
                if verdict:
                    run.finish_active()
                nxt = next_cue(state, verdict, run.env_done, config)
                run.state = replace(state, phase=nxt, active_goal=None if verdict else state.active_goal)
                continue

            raw = ask(phase)
            try:
                content = parsed(phase, raw)
            except ParseError as exc:
                run.parse_failures += 1
                if run.parse_failures >= config.max_parse_retries:
                    run.error = f"parse_abort: {config.max_parse_retries} consecutive parse errors at {phase.value}: {exc}"
                    outcome = "failure"
                    break
                continue
            run.parse_failures = 0

            if phase is Phase.NEED_GOAL:
                goal = run.add_goal(content)
                state = replace(state, active_goal=goal, goals_proposed=state.goals_proposed + 1)
            elif phase is Phase.NEED_THINK:
                run.trajectory = run.trajectory.add(Tag.THINK, content)
            else:
                result = env.step(content)
                run.trajectory = run.trajectory.add(Tag.ACTION, content, result.observation)
                state = replace(state, steps_taken=state.steps_taken + 1)
                if result.done:
                    run.env_done = True
                    run.reward = result.reward
                # every action gets its Finish verdict, even one that ends the episode
                # or uses up the step cap; termination is seen right after the verdict
                run.state = replace(state, phase=Phase.NEED_FINISH)
                continue
            run.state = replace(state, phase=next_cue(state, None, False, config))
    except BackendError as exc:
        run.error = f"{type(exc).__name__}: {exc}"
        raise EpisodeAborted(run.episode("truncated"), exc) from exc

    if outcome is None:
        if run.env_done and run.reward >= 1.0:
            outcome = "success"
        elif run.env_done:
            outcome = "failure"
        else:
            outcome = "truncated"
    return run.episode(outcome)
