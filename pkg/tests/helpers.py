"""Shared builders and hypothesis strategies for the test suite."""

from __future__ import annotations

import re

from hypothesis import strategies as st

from hicrl.backend import FunctionBackend
from hicrl.core import GOAL_FINISHED, GOAL_OPEN, Episode, Goal, Step, Tag, Trajectory
from hicrl.envs import Scenario
from hicrl.envs.minihouse import plan_oracle


def build_trajectory(plan: list[tuple[str, list[str], bool]], cut: int | None = None) -> Trajectory:
    """``plan`` = [(goal text, [actions], finished)]; Finish is Yes only after the last action of a finished goal."""
    traj = Trajectory()
    goals = []
    for gi, (text, actions, finished) in enumerate(plan):
        goals.append((gi, text, len(traj), finished))
        traj = traj.add(Tag.GOAL, text).add(Tag.THINK, f"plan for {text}")
        for i, action in enumerate(actions):
            traj = traj.add(Tag.ACTION, action, f"obs after {action}")
            traj = traj.add(Tag.FINISH, "Yes" if finished and i == len(actions) - 1 else "No")
    steps = traj.steps if cut is None else traj.steps[:cut]
    final_goals = [
        Goal(gi, text, GOAL_FINISHED if finished and any(s.index > start and s.is_finish_yes for s in steps) else GOAL_OPEN, start)
        for gi, text, start, finished in goals
        if start < len(steps)
    ]
    return Trajectory(steps, final_goals)


@st.composite
def failed_plans(draw, max_finished: int = 8, with_tail: bool | None = None):
    """n finished goals (each with >= 1 action) plus an optional open tail goal."""
    n = draw(st.integers(0, max_finished))
    plan = []
    for g in range(n):
        k = draw(st.integers(1, 4))
        plan.append((f"goal {g}", [f"act {g}.{i}" for i in range(k)], True))
    tail = draw(st.booleans()) if with_tail is None else with_tail
    if tail or n == 0:
        k = draw(st.integers(0, 4))
        plan.append((f"goal {n}", [f"act {n}.{i}" for i in range(k)], False))
    return plan


@st.composite
def valid_trajectories(draw, max_goals: int = 8):
    """Grammar-valid trajectories, possibly cut short at any step."""
    plan = draw(failed_plans(max_finished=max_goals))
    full = build_trajectory(plan)
    cut = draw(st.one_of(st.none(), st.integers(1, len(full.steps))))
    return build_trajectory(plan, cut)


def failed_episode(traj: Trajectory, scenario_id: str = "minihouse-000", index: int = 1) -> Episode:
    return Episode(scenario_id, traj, "failure", 0.0, episode_index=index)


def constant_backend(text: str = "Check the receptacle before acting.") -> FunctionBackend:
    return FunctionBackend(lambda request: text)


def cool_mug_scenario() -> Scenario:
    """Hand-built house: a mug on the counter, a fridge, and the cabinet it must end up in."""
    world = {
        "receptacles": {
            "cabinet 1": {"type": "cabinet", "open": False, "contents": []},
            "countertop 1": {"type": "countertop", "open": True, "contents": ["mug 1"]},
            "fridge 1": {"type": "fridge", "open": False, "contents": []},
            "sidetable 1": {"type": "sidetable", "open": True, "contents": ["desklamp 1"]},
        },
        "objects": {
            "mug 1": {"type": "mug", "attrs": []},
            "desklamp 1": {"type": "desklamp", "attrs": [], "on": False},
        },
    }
    gold = {"predicate": "cool", "object_type": "mug", "target_type": "cabinet"}
    return Scenario("minihouse", 900, "cool some mug and put it in cabinet.", "cool", gold, world,
                    tuple(plan_oracle(world, gold)))


def step_lines(text: str) -> list[str]:
    return [line for line in text.split("\n") if re.match(r"^\[(Goal|Think|Action|Finish)\]", line)]


def linear_scan_segments(steps: tuple[Step, ...]) -> list[tuple[int, int]]:
    """Independent oracle: [start, end) index pairs split right after each Finish=Yes."""
    bounds, start = [], 0
    for i, s in enumerate(steps):
        if s.tag is Tag.FINISH and s.content == "Yes":
            bounds.append((start, i + 1))
            start = i + 1
    if start < len(steps):
        bounds.append((start, len(steps)))
    return bounds


class Interrupted(BaseException):
    """Stands in for a kill signal: not an Exception, so nothing in the harness swallows it."""


class InterruptingBackend:
    """Delegates to ``inner`` and raises Interrupted on call number ``after + 1``."""

    def __init__(self, inner, after: int):
        self.inner = inner
        self.after = after
        self.calls = 0

    def bind(self, scenario_id: str, episode_index: int):
        session = self.inner.bind(scenario_id, episode_index)
        owner = self

        class _Session:
            def complete(self, request):
                if owner.calls >= owner.after:
                    raise Interrupted(f"killed after {owner.after} calls")
                owner.calls += 1
                return session.complete(request)

        return _Session()


def run_files(run_dir) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(run_dir.iterdir())}
