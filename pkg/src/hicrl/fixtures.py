"""Scripted-backend fixtures derived from oracle plans.

A fixture lists, per (scenario, episode), the completions a scripted backend
plays back in call order. Solving episodes replay the oracle with tagged
steps; failing episodes issue an invalid command until the step cap runs
out. Each failing episode is followed by enough reflection texts for any
learning rule (unused entries are simply never read).
"""

from __future__ import annotations

from typing import Sequence

from .backend import write_fixture
from .engine import RunConfig
from .envs import Scenario

FAILING_ACTION = "look around for a while"
FAILING_GOAL = "Look around before doing anything."
REFLECTION_TEXT = (
    "I never issued a command the environment understood. Next time I should pick a concrete sub-goal "
    "from the task and use the exact action grammar."
)


def _typed(kind: str, text: str, tagged: bool) -> str:
    # untagged runs expect the model to name its own step type
    return text if tagged else f"{kind}: {text}"


def solving_responses(scenario: Scenario, tagged: bool = True) -> list[str]:
    """Goal, Think, then Action/Finish pairs that replay the oracle plan."""
    out: list[str] = []
    for seg in scenario.oracle:
        out.append(_typed("goal", seg["goal"][0].upper() + seg["goal"][1:] + ".", tagged))
        out.append(_typed("think", f"To {seg['goal']}, I will " + ", then ".join(seg["actions"]) + ".", tagged))
        for i, action in enumerate(seg["actions"]):
            out += [_typed("action", action, tagged), _typed("finish", "Yes" if i == len(seg["actions"]) - 1 else "No", tagged)]
    return out


def failing_responses(config: RunConfig, extra_reflections: int = 12) -> list[str]:
    """One goal that never finishes: the episode ends at the step cap."""
    tagged = config.mode != "notag"
    out = [_typed("goal", FAILING_GOAL, tagged), _typed("think", "I will look around first.", tagged)]
    for _ in range(config.max_env_steps):
        out += [_typed("action", FAILING_ACTION, tagged), _typed("finish", "No", tagged)]
    return out + [REFLECTION_TEXT] * extra_reflections


def build_fixture(
    scenarios: Sequence[Scenario],
    config: RunConfig,
    solve_at: int | dict[str, int | None] | None = 1,
) -> dict[tuple[str, int], list[str]]:
    """Responses for every scenario: fail until episode ``solve_at``, then solve.

    ``solve_at`` may be a per-scenario map; None means the scenario never succeeds.
    Failing episodes are sized for ``config.max_env_steps``, so pass the config the run will use.
    """
    out: dict[tuple[str, int], list[str]] = {}
    for sc in scenarios:
        k_solve = solve_at.get(sc.scenario_id) if isinstance(solve_at, dict) else solve_at
        for k in range(1, config.episodes + 1):
            if k_solve is not None and k == k_solve:
                out[(sc.scenario_id, k)] = solving_responses(sc, config.mode != "notag")
                break
            out[(sc.scenario_id, k)] = failing_responses(config)
    return out


def emit_fixture(path, scenarios: Sequence[Scenario], config: RunConfig, solve_at=1) -> int:
    responses = build_fixture(scenarios, config, solve_at)
    write_fixture(path, responses)
    return sum(len(v) for v in responses.values())
